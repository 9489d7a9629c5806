// Prints beta, eta(n) and the sample size needed for a few targets, for a
// handful of penalties at (m, d) = (16, 32).
#include <cstdio>

#include "dlsc/bounds.hpp"

int main() {
  using namespace dlsc;
  const long long m = 16, d = 32;
  const Penalty pens[] = {Penalty(1, 1, 1), Penalty(0.5, 1, 1), Penalty(2, 2, 1), Penalty(1, 1, 10)};
  std::printf("%-16s %10s %12s %12s %12s %12s %14s\n", "penalty (p,q,l)", "L", "beta", "eta(1e4)",
              "eta(1e6)", "eta(1e8)", "n for eta=0.1");
  for (const Penalty& pen : pens) {
    BoundInputs in{m, d, pen, 1000000, 1.0, {}};
    const double L = effective_L(in);
    const double beta = compute_beta(m, d, L);
    char label[64];
    std::snprintf(label, sizeof label, "(%g, %g, %g)", pen.p(), pen.q(), pen.lambda());
    std::printf("%-16s %10.4g %12.6g %12.6g %12.6g %12.6g %14lld\n", label, L, beta, compute_eta(10000, beta, 1.0), compute_eta(1000000, beta, 1.0),
                compute_eta(100000000, beta, 1.0), required_samples(0.1, m, d, L, 1.0));
  }
}
