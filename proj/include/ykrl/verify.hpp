#pragma once

#include <random>

#include "ykrl/envs.hpp"
#include "ykrl/hankel.hpp"
#include "ykrl/stable_ops.hpp"

namespace ykrl {

// Randomized oracle-equivalence cases shared by the sim-check subcommand and
// the acceptance suite.

struct Alg1CaseResult {
    int n = 0;
    int L = 0;
    double max_error = 0.0;
};

// Data-driven simulation vs. state-space simulation: a random stable plant,
// noise-free exploration of length >= 10 (L + n), window length L = n
// (L = n - 1 when the hypothesis is deliberately violated), and a bounded
// random input over sim_steps.
Alg1CaseResult alg1_equivalence_case(std::mt19937_64& rng, int max_order, int sim_steps,
                                     bool force_L_below_order = false);

struct Thm3CaseResult {
    int n = 0;
    int n_q = 0;
    double max_error = 0.0;
};

// Data-driven controller vs. the explicit interconnection of K = Q/(1 - QP):
// identical stable LTI Q, piecewise-constant random reference, noise-free.
Thm3CaseResult thm3_equivalence_case(std::mt19937_64& rng, int max_plant_order, int max_q_order,
                                     int steps);

}  // namespace ykrl
