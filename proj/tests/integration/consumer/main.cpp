#include <cstdio>

#include "qcal/calib.hpp"
#include "qcal/linalg.hpp"

int main() {
  const qcal::Matrix x = qcal::Matrix::identity(3);
  const double cond = qcal::condition_number(x);
  const auto sel = qcal::select_lambda(std::vector<double>{10.0, 1.0, 0.5, 0.05}, {});
  std::printf("cond %g lambda %g\n", cond, sel.lambda);
  return cond == 1.0 && sel.lambda == 0.25 ? 0 : 1;
}
