// Hitting times of level n for the beta-biased walk on the reference tree,
// printed with their trap-free part.
#include <cmath>
#include <cstdio>
#include <memory>

#include <gwrw/environment.hpp>
#include <gwrw/walk.hpp>

int main() {
  using namespace gwrw;
  const OffspringLaw law({0.2, 0.0, 0.8});
  const double beta = 5.0;
  auto model = std::make_shared<const EnvironmentModel>(law, beta);
  const double gamma = model->params.gamma;
  std::printf("gamma = %.5f, 1/gamma = %.4f\n", gamma, 1 / gamma);
  std::printf("%6s %14s %14s %10s\n", "n", "Delta_n", "Delta_n/n^1/g", "chi share");
  for (std::int64_t n : {100, 200, 400, 800}) {
    Environment env(model, derive_seed(1, std::uint64_t(n)));
    const auto r = run_hitting(env, n, derive_seed(2, std::uint64_t(n)));
    std::printf("%6lld %14lld %14.4f %10.3f\n", (long long)n, (long long)r.delta_n,
                double(r.delta_n) / std::pow(double(n), 1 / gamma), double(r.chi_n) / double(r.delta_n));
  }
}
