#include "cranebench/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <memory>
#include <thread>

#include "cranebench/ode.hpp"
#include "cranebench/rng.hpp"

namespace cranebench::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs one hook invocation, catching exceptions (level 1) and validating the
// output shape and finiteness (level 2). Returns true on success.
template <typename Call>
bool guarded_hook(Call&& call, const char* hook_name, Eigen::Index want_size,
                  int sample, Eigen::VectorXd& out,
                  std::vector<ErrorEvent>& events) {
  try {
    out = call();
  } catch (const std::exception& e) {
    events.push_back({1, sample,
                      std::string(hook_name) + " threw: " + e.what()});
    return false;
  } catch (...) {
    events.push_back(
        {1, sample, std::string(hook_name) + " threw a non-standard object"});
    return false;
  }
  if (out.size() != want_size) {
    events.push_back({2, sample,
                      std::string(hook_name) + " returned " +
                          std::to_string(out.size()) + " values, expected " +
                          std::to_string(want_size)});
    return false;
  }
  if (!out.allFinite()) {
    events.push_back(
        {2, sample, std::string(hook_name) + " returned non-finite values"});
    return false;
  }
  return true;
}

// Standard normal draw via Box-Muller on the portable generator.
double gaussian(SplitMix64& rng) {
  double u1 = rng.next_unit();
  if (u1 <= 0.0) u1 = 1e-300;
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Eigen::Vector4d measure(const crane::CraneState& state) {
  return {state.x, state.y, state.theta, state.psi};
}

Trajectory simulate(const testcases::Testcase& tc, const ControllerHooks& hooks,
                    const SimulateOptions& options) {
  if (options.plant_substeps < 1)
    throw std::invalid_argument("plant_substeps must be >= 1");

  const int n_steps = tc.num_samples();
  const int n_rows = n_steps + 1;
  const crane::CraneParams plant_params = crane::perturb_params(
      tc.nominal_params, tc.param_perturbation, tc.seed);

  Trajectory traj;
  traj.times.reserve(n_rows);
  traj.true_states.reserve(n_rows);
  traj.measurements = Eigen::MatrixXd::Zero(n_rows, 4);
  traj.estimates = Eigen::MatrixXd::Zero(n_rows, 8);
  traj.references = Eigen::MatrixXd::Zero(n_rows, 8);
  traj.inputs = Eigen::MatrixXd::Zero(n_rows, 2);
  traj.solver_time_per_sample.assign(n_rows, 0.0);

  // Separate stream from the parameter perturbation draws.
  SplitMix64 noise_rng(tc.seed ^ 0xa5a5a5a5deadbeefULL);
  const bool with_noise = tc.measurement_noise_std.cwiseAbs().maxCoeff() > 0.0;

  crane::CraneState state;
  state.x = tc.start.x();
  state.y = tc.start.y();

  ControllerState controller_state;
  bool setup_ok = true;
  try {
    controller_state = hooks.setup(testcases::public_view(tc));
  } catch (const std::exception& e) {
    traj.error_events.push_back({1, 0, std::string("setup threw: ") + e.what()});
    setup_ok = false;
  } catch (...) {
    traj.error_events.push_back({1, 0, "setup threw a non-standard object"});
    setup_ok = false;
  }

  int rows_written = 0;
  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * tc.ts;
    traj.times.push_back(t);
    traj.true_states.push_back(state);
    Eigen::Vector4d y = measure(state);
    if (with_noise)
      for (int i = 0; i < 4; ++i)
        y[i] += tc.measurement_noise_std[i] * gaussian(noise_rng);
    traj.measurements.row(k) = y.transpose();
    ++rows_written;

    // Hook chain; the first fault zeroes this sample's input and skips the
    // remaining calls.
    Eigen::VectorXd reference = Eigen::VectorXd::Zero(8);
    Eigen::VectorXd estimate = Eigen::VectorXd::Zero(8);
    Eigen::VectorXd input = Eigen::VectorXd::Zero(2);
    bool ok = setup_ok;
    if (ok)
      ok = guarded_hook(
          [&] { return hooks.target_generator(t, y, controller_state); },
          "target_generator", 8, k, reference, traj.error_events);
    if (ok) {
      traj.references.row(k) = reference.transpose();
      ok = guarded_hook(
          [&] {
            return hooks.state_estimator(t, y, reference, controller_state);
          },
          "state_estimator", 8, k, estimate, traj.error_events);
    }
    if (ok) {
      traj.estimates.row(k) = estimate.transpose();
      const auto t0 = Clock::now();
      ok = guarded_hook(
          [&] {
            return hooks.mp_controller(t, estimate, reference,
                                       controller_state);
          },
          "mp_controller", 2, k, input, traj.error_events);
      traj.solver_time_per_sample[k] = seconds_since(t0);
    }
    if (!ok) input = Eigen::VectorXd::Zero(2);
    traj.inputs.row(k) = input.transpose();  // recorded unclamped

    if (k == n_steps) break;

    // Advance the plant with the input held over the sample interval.
    const crane::ControlInput u{input[0] + options.input_disturbance[0],
                                input[1] + options.input_disturbance[1]};
    const double h = tc.ts / options.plant_substeps;
    bool integration_ok = true;
    Eigen::VectorXd x_vec = state.vec();
    for (int sub = 0; sub < options.plant_substeps && integration_ok; ++sub) {
      try {
        x_vec = numerics::rk4_step(
            [&](double, const Eigen::VectorXd& xv) {
              const auto s = crane::CraneState::from_vec(xv);
              return Eigen::VectorXd(options.plant_override
                                         ? options.plant_override(s, u,
                                                                  plant_params)
                                         : crane::dynamics(s, u, plant_params));
            },
            t + sub * h, x_vec, h);
      } catch (const std::exception& e) {
        integration_ok = false;
        traj.error_events.push_back(
            {3, k, std::string("plant integration failed: ") + e.what()});
      }
      if (integration_ok && !x_vec.allFinite()) {
        integration_ok = false;
        traj.error_events.push_back(
            {3, k, "plant integration produced a non-finite state"});
      }
    }
    if (!integration_ok) {
      traj.truncated = true;
      break;
    }
    state = crane::CraneState::from_vec(x_vec);
  }

  traj.measurements.conservativeResize(rows_written, Eigen::NoChange);
  traj.estimates.conservativeResize(rows_written, Eigen::NoChange);
  traj.references.conservativeResize(rows_written, Eigen::NoChange);
  traj.inputs.conservativeResize(rows_written, Eigen::NoChange);
  traj.solver_time_per_sample.resize(rows_written);
  return traj;
}

std::vector<Trajectory> run_suite(const std::vector<testcases::Testcase>& suite,
                                  const HooksFactory& hooks_factory,
                                  const RunOptions& options) {
  if (suite.empty()) throw std::invalid_argument("suite must not be empty");
  if (options.parallelism < 1)
    throw std::invalid_argument("parallelism must be >= 1");

  std::vector<Trajectory> results(suite.size());
  std::atomic<size_t> next{0};

  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= suite.size()) return;
      const testcases::Testcase& tc = suite[i];

      // The simulation runs in its own thread so a stuck hook can be
      // abandoned when the watchdog expires.
      auto hooks = std::make_shared<ControllerHooks>(
          hooks_factory(testcases::public_view(tc)));
      auto task = std::make_shared<std::packaged_task<Trajectory()>>(
          [hooks, tc, sim = options.sim] { return simulate(tc, *hooks, sim); });
      std::future<Trajectory> future = task->get_future();
      std::thread runner([task] { (*task)(); });

      const auto budget = std::chrono::duration<double>(
          options.watchdog_budget_s);
      if (future.wait_for(budget) == std::future_status::ready) {
        runner.join();
        try {
          results[i] = future.get();
        } catch (const std::exception& e) {
          // simulate only throws on precondition violations.
          Trajectory traj;
          traj.truncated = true;
          traj.error_events.push_back(
              {3, 0, std::string("simulation aborted: ") + e.what()});
          results[i] = traj;
        }
      } else {
        runner.detach();  // reclaimed at process exit
        Trajectory traj;
        traj.truncated = true;
        traj.error_events.push_back(
            {4, 0, "watchdog expired after " +
                       std::to_string(options.watchdog_budget_s) + " s"});
        results[i] = traj;
      }
    }
  };

  const int n_workers =
      std::min<int>(options.parallelism, static_cast<int>(suite.size()));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,x,xdot,y,ydot,theta,thetadot,psi,psidot,"
         "meas_x,meas_y,meas_theta,meas_psi,"
         "est_x,est_xdot,est_y,est_ydot,est_theta,est_thetadot,est_psi,"
         "est_psidot,"
         "ref_x,ref_xdot,ref_y,ref_ydot,ref_theta,ref_thetadot,ref_psi,"
         "ref_psidot,ux,uy,solver_time\n";
  char line[1024];
  for (int k = 0; k < traj.num_samples(); ++k) {
    const auto s = traj.true_states[k].vec();
    int pos = std::snprintf(line, sizeof line, "%.12g", traj.times[k]);
    const auto append = [&](double v) {
      pos += std::snprintf(line + pos, sizeof line - pos, ",%.12g", v);
    };
    for (int i = 0; i < 8; ++i) append(s[i]);
    for (int i = 0; i < 4; ++i) append(traj.measurements(k, i));
    for (int i = 0; i < 8; ++i) append(traj.estimates(k, i));
    for (int i = 0; i < 8; ++i) append(traj.references(k, i));
    append(traj.inputs(k, 0));
    append(traj.inputs(k, 1));
    append(traj.solver_time_per_sample[k]);
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cranebench::harness
