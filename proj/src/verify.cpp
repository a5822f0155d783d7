#include "ykrl/verify.hpp"

#include <algorithm>
#include <cmath>

#include "ykrl/rng.hpp"
#include "ykrl/youla.hpp"

namespace ykrl {

Alg1CaseResult alg1_equivalence_case(std::mt19937_64& rng, int max_order, int sim_steps,
                                     bool force_L_below_order) {
    Alg1CaseResult result;
    const int min_order = force_L_below_order ? 2 : 1;
    std::uniform_int_distribution<int> order_dist(min_order, max_order);
    result.n = order_dist(rng);
    result.L = force_L_below_order ? result.n - 1 : result.n;

    StateSpaceModel plant = random_stable_plant(rng, result.n);
    const int data_len = std::max(10 * (result.L + result.n), 12 * result.n) + 1;

    Trajectory data;
    data.dt = plant.dt;
    plant.reset();
    for (int t = 0; t < data_len; ++t) {
        const double u = gauss(rng);
        data.inputs.push_back(u);
        data.outputs.push_back(plant.output());
        plant.step(u);
    }

    HankelSystem::Options opt;
    opt.L = result.L;
    opt.declared_order = result.n;
    // In the deliberate L < n violation the mismatch itself is the point, so
    // keep the consistency check from aborting the case.
    opt.noisy = force_L_below_order;
    HankelSystem sim_sys(data, opt);

    // Fresh rollout: L window samples, then the reference continuation.
    plant.reset();
    Window window = Window::zeros(result.L);
    std::uniform_real_distribution<double> input_dist(-1.0, 1.0);
    for (int t = 0; t < result.L; ++t) {
        const double u = input_dist(rng);
        window.u(t) = u;
        window.y(t) = plant.output();
        plant.step(u);
    }
    std::vector<double> u_test(sim_steps);
    for (double& u : u_test) u = input_dist(rng);
    std::vector<double> y_true(sim_steps);
    for (int t = 0; t < sim_steps; ++t) {
        y_true[t] = plant.output();
        plant.step(u_test[t]);
    }

    Trajectory continued = sim_sys.data_driven_simulate(
        window, [&](int t, double) { return u_test[static_cast<std::size_t>(t)]; }, sim_steps);
    for (int t = 0; t < sim_steps; ++t)
        result.max_error = std::max(result.max_error, std::abs(continued.outputs[t] - y_true[t]));
    return result;
}

Thm3CaseResult thm3_equivalence_case(std::mt19937_64& rng, int max_plant_order, int max_q_order,
                                     int steps) {
    Thm3CaseResult result;
    std::uniform_int_distribution<int> order_dist(1, max_plant_order);
    std::uniform_int_distribution<int> q_order_dist(1, max_q_order);
    result.n = order_dist(rng);
    result.n_q = q_order_dist(rng);

    StateSpaceModel plant = random_stable_plant(rng, result.n);
    const QLtiParams q_params = QLtiParams::random(result.n_q, rng, 0.7);

    const int L = result.n;
    const int data_len = std::max(10 * (L + result.n), 12 * result.n) + 1;
    Trajectory data;
    data.dt = plant.dt;
    plant.reset();
    for (int t = 0; t < data_len; ++t) {
        const double u = gauss(rng);
        data.inputs.push_back(u);
        data.outputs.push_back(plant.output());
        plant.step(u);
    }
    HankelSystem::Options opt;
    opt.L = L;
    opt.declared_order = result.n;
    auto sys = std::make_shared<HankelSystem>(data, opt);

    // Piecewise-constant random reference.
    std::uniform_real_distribution<double> ref_dist(-1.0, 1.0);
    std::vector<double> reference(steps);
    double level = ref_dist(rng);
    for (int t = 0; t < steps; ++t) {
        if (t % 25 == 0) level = ref_dist(rng);
        reference[t] = level;
    }

    YoulaController ctrl(sys, q_params.realize());
    StateSpaceModel loop_plant = plant;
    loop_plant.reset();
    YkOracle oracle(plant, q_params.realize());

    for (int t = 0; t < steps; ++t) {
        const double r = reference[t];
        const double y = loop_plant.output();
        const double u_alg2 = ctrl.step(r, y);
        loop_plant.step(u_alg2);
        const YkOracle::StepResult ref_step = oracle.step(r);
        result.max_error = std::max(result.max_error, std::abs(u_alg2 - ref_step.u));
    }
    return result;
}

}  // namespace ykrl
