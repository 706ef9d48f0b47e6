// Regenerates the Monte Carlo truths frozen into tests/fixtures.hpp. Run with
// two different seeds and compare: agreement within a couple of combined
// standard errors is the sanity check that the integrals have converged.
//
// Usage: pce_oracle [draws] [seed]

#include <cinttypes>
#include <cstdio>
#include <cstdlib>

#include "pce/simulate.hpp"

namespace {

void print_row(const char* label, const pce::TruthResult& t) {
  std::printf("%-18s tau = %.7f %.7f %.7f   se = %.7f %.7f %.7f\n", label, t.tau[0], t.tau[1],
              t.tau[2], t.se[0], t.se[1], t.se[2]);
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t draws = argc > 1 ? std::atoll(argv[1]) : 10000000;
  std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 4001;
  std::printf("draws = %" PRId64 ", seed = %" PRIu64 "\n", draws, seed);

  for (bool ps : {true, false}) {
    for (bool om : {true, false}) {
      pce::DgpSpec dgp;
      dgp.ps_correct = ps;
      dgp.om_correct = om;
      char label[32];
      std::snprintf(label, sizeof label, "main ps=%d om=%d", ps ? 1 : 0, om ? 1 : 0);
      print_row(label, pce::true_pce(dgp, draws, seed));
    }
  }

  pce::TiltedDgpSpec tilted;
  tilted.tp_correct = false;
  tilted.eps1 = 1.5;
  tilted.eps0 = 1.5;
  print_row("tilted eps=1.5", pce::true_pce_tilted(tilted, draws, seed));

  pce::OneSidedDgpSpec one_sided;
  print_row("one-sided", pce::true_pce_one_sided(one_sided, draws, seed));
  return 0;
}
