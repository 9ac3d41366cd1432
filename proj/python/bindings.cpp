#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cranebench/controllers.hpp"
#include "cranebench/grading.hpp"
#include "cranebench/json_io.hpp"
#include "cranebench/ode.hpp"
#include "cranebench/qp.hpp"
#include "cranebench/quadrature.hpp"
#include "cranebench/report.hpp"

namespace py = pybind11;
using namespace cranebench;

namespace {

// Python-side controllers supply the four callbacks as callables; outputs are
// converted to dense vectors so the harness validation applies unchanged.
harness::ControllerHooks hooks_from_python(py::object setup, py::object target,
                                           py::object estimator,
                                           py::object controller) {
  harness::ControllerHooks hooks;
  hooks.setup = [setup](const testcases::PublicTestcase& view) {
    py::gil_scoped_acquire gil;
    return harness::ControllerState(setup(view));
  };
  hooks.target_generator = [target](double t, const Eigen::VectorXd& y,
                                    harness::ControllerState& cs) {
    py::gil_scoped_acquire gil;
    py::object& state = std::any_cast<py::object&>(cs);
    return target(t, y, state).cast<Eigen::VectorXd>();
  };
  hooks.state_estimator = [estimator](double t, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& r,
                                      harness::ControllerState& cs) {
    py::gil_scoped_acquire gil;
    py::object& state = std::any_cast<py::object&>(cs);
    return estimator(t, y, r, state).cast<Eigen::VectorXd>();
  };
  hooks.mp_controller = [controller](double t, const Eigen::VectorXd& xhat,
                                     const Eigen::VectorXd& r,
                                     harness::ControllerState& cs) {
    py::gil_scoped_acquire gil;
    py::object& state = std::any_cast<py::object&>(cs);
    return controller(t, xhat, r, state).cast<Eigen::VectorXd>();
  };
  return hooks;
}

testcases::Testcase testcase_from_json_str(const std::string& text) {
  return json_io::testcase_from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gantry crane MPC benchmark: plant model, numerics, MPC "
            "builders, testcase generation, closed-loop harness and grading";

  // --- crane ---------------------------------------------------------------
  py::class_<crane::CraneParams>(m, "CraneParams")
      .def(py::init<>())
      .def_readwrite("cart_mass", &crane::CraneParams::cart_mass)
      .def_readwrite("payload_mass", &crane::CraneParams::payload_mass)
      .def_readwrite("cable_length", &crane::CraneParams::cable_length)
      .def_readwrite("force_gain", &crane::CraneParams::force_gain)
      .def_readwrite("cart_friction", &crane::CraneParams::cart_friction)
      .def_readwrite("swing_damping", &crane::CraneParams::swing_damping)
      .def_readwrite("gravity", &crane::CraneParams::gravity);

  py::class_<crane::CraneState>(m, "CraneState")
      .def(py::init<>())
      .def_readwrite("x", &crane::CraneState::x)
      .def_readwrite("xdot", &crane::CraneState::xdot)
      .def_readwrite("y", &crane::CraneState::y)
      .def_readwrite("ydot", &crane::CraneState::ydot)
      .def_readwrite("theta", &crane::CraneState::theta)
      .def_readwrite("thetadot", &crane::CraneState::thetadot)
      .def_readwrite("psi", &crane::CraneState::psi)
      .def_readwrite("psidot", &crane::CraneState::psidot)
      .def("vec", &crane::CraneState::vec)
      .def_static("from_vec", &crane::CraneState::from_vec);

  m.def(
      "dynamics",
      [](const crane::CraneState& s, double ux, double uy,
         const crane::CraneParams& p) {
        return crane::dynamics(s, crane::ControlInput{ux, uy}, p);
      },
      py::arg("state"), py::arg("ux"), py::arg("uy"), py::arg("params"));
  m.def(
      "payload_position",
      [](const crane::CraneState& s, const crane::CraneParams& p)
          -> Eigen::Vector2d { return crane::payload_position(s, p); },
      py::arg("state"), py::arg("params"));
  m.def(
      "linearize",
      [](const crane::CraneParams& p, const crane::CraneState& op) {
        const auto lin = crane::linearize(p, op);
        return py::make_tuple(Eigen::MatrixXd(lin.A), Eigen::MatrixXd(lin.B),
                              Eigen::MatrixXd(lin.C));
      },
      py::arg("params"), py::arg("operating_point"));
  m.def("perturb_params", &crane::perturb_params, py::arg("params"),
        py::arg("magnitude"), py::arg("seed"));

  // --- numerics ------------------------------------------------------------
  py::class_<numerics::IntegratorResult>(m, "IntegratorResult")
      .def_readonly("times", &numerics::IntegratorResult::times)
      .def_readonly("states", &numerics::IntegratorResult::states)
      .def_readonly("step_count", &numerics::IntegratorResult::step_count)
      .def_readonly("rejected_step_count",
                    &numerics::IntegratorResult::rejected_step_count);
  m.def("euler_explicit", &numerics::euler_explicit);
  m.def("euler_implicit", &numerics::euler_implicit);
  m.def("rk4", &numerics::rk4);
  m.def("rk45_adaptive", &numerics::rk45_adaptive);
  m.def("quad_riemann", [](const std::vector<double>& s, double h) {
    return numerics::quad_riemann(s, h);
  });
  m.def("quad_trapezoid", [](const std::vector<double>& s, double h) {
    return numerics::quad_trapezoid(s, h);
  });
  m.def("quad_simpson", [](const std::vector<double>& s, double h) {
    return numerics::quad_simpson(s, h);
  });
  m.def(
      "solve_qp",
      [](const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
         const Eigen::MatrixXd& A_ineq, const Eigen::VectorXd& b_ineq) {
        numerics::QpProblem p;
        p.H = H;
        p.f = f;
        p.A_ineq = A_ineq;
        p.b_ineq = b_ineq;
        p.A_eq.resize(0, f.size());
        p.b_eq.resize(0);
        const auto sol = numerics::solve_qp(p);
        py::dict out;
        out["x"] = sol.x;
        out["status"] = sol.status == numerics::QpStatus::kOptimal
                            ? "optimal"
                            : sol.status == numerics::QpStatus::kInfeasible
                                  ? "infeasible"
                                  : "max_iterations";
        out["active_set"] = sol.active_set;
        out["objective"] = sol.objective;
        return out;
      },
      py::arg("H"), py::arg("f"),
      py::arg("A_ineq") = Eigen::MatrixXd(0, 0),
      py::arg("b_ineq") = Eigen::VectorXd(0));

  // --- mpc builders ---------------------------------------------------------
  py::class_<mpc::DiscreteModel>(m, "DiscreteModel")
      .def(py::init<>())
      .def_readwrite("A", &mpc::DiscreteModel::A)
      .def_readwrite("B", &mpc::DiscreteModel::B)
      .def_readwrite("C", &mpc::DiscreteModel::C)
      .def_readwrite("ts", &mpc::DiscreteModel::ts);
  m.def("discretize_zoh", &mpc::discretize_zoh, py::arg("Ac"), py::arg("Bc"),
        py::arg("ts"));
  m.def(
      "build_prediction",
      [](const mpc::DiscreteModel& model, int horizon) {
        const auto pred = mpc::build_prediction(model, horizon);
        return py::make_tuple(pred.Phi, pred.Gamma);
      },
      py::arg("model"), py::arg("horizon"));
  m.def(
      "build_cost",
      [](const mpc::DiscreteModel& model, int horizon,
         const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
         const Eigen::MatrixXd& P) {
        const auto cc = mpc::build_cost(mpc::build_prediction(model, horizon),
                                        mpc::CostSpec{Q, R, P});
        return py::make_tuple(cc.H, cc.G);
      },
      py::arg("model"), py::arg("horizon"), py::arg("Q"), py::arg("R"),
      py::arg("P"));
  m.def(
      "unconstrained_rhc_gain",
      [](const mpc::DiscreteModel& model, const Eigen::MatrixXd& Q,
         const Eigen::MatrixXd& R, const Eigen::MatrixXd& P, int horizon) {
        return mpc::unconstrained_rhc_gain(model, mpc::CostSpec{Q, R, P},
                                           horizon);
      },
      py::arg("model"), py::arg("Q"), py::arg("R"), py::arg("P"),
      py::arg("horizon"));
  m.def("riccati_terminal_weight", &mpc::riccati_terminal_weight,
        py::arg("model"), py::arg("Q"), py::arg("R"));

  // --- regions ---------------------------------------------------------------
  m.def(
      "region_contains",
      [](const std::string& region_json, const Eigen::Vector2d& p) {
        return regions::contains(
            json_io::region_from_json(nlohmann::json::parse(region_json)), p);
      },
      py::arg("region_json"), py::arg("point"));
  m.def(
      "region_signed_margin",
      [](const std::string& region_json, const Eigen::Vector2d& p) {
        return regions::signed_margin(
            json_io::region_from_json(nlohmann::json::parse(region_json)), p);
      },
      py::arg("region_json"), py::arg("point"));

  // --- testcases --------------------------------------------------------------
  py::class_<testcases::Testcase>(m, "Testcase")
      .def_readonly("name", &testcases::Testcase::name)
      .def_readonly("start", &testcases::Testcase::start)
      .def_readonly("target", &testcases::Testcase::target)
      .def_readonly("T_f", &testcases::Testcase::T_f)
      .def_readonly("ts", &testcases::Testcase::ts)
      .def_readonly("eps_t", &testcases::Testcase::eps_t)
      .def_readonly("eps_r", &testcases::Testcase::eps_r)
      .def_readonly("W_max", &testcases::Testcase::W_max)
      .def_readonly("param_perturbation",
                    &testcases::Testcase::param_perturbation)
      .def_readonly("seed", &testcases::Testcase::seed)
      .def("to_json",
           [](const testcases::Testcase& tc) {
             return json_io::to_json(tc).dump(2);
           })
      .def_static("from_json", &testcase_from_json_str);

  py::class_<testcases::PublicTestcase>(m, "PublicTestcase")
      .def_readonly("name", &testcases::PublicTestcase::name)
      .def_readonly("start", &testcases::PublicTestcase::start)
      .def_readonly("target", &testcases::PublicTestcase::target)
      .def_readonly("T_f", &testcases::PublicTestcase::T_f)
      .def_readonly("ts", &testcases::PublicTestcase::ts)
      .def_readonly("eps_t", &testcases::PublicTestcase::eps_t)
      .def_readonly("eps_r", &testcases::PublicTestcase::eps_r)
      .def_readonly("W_max", &testcases::PublicTestcase::W_max)
      .def_readonly("params", &testcases::PublicTestcase::params)
      .def("region_json", [](const testcases::PublicTestcase& view) {
        return json_io::to_json(view.region).dump();
      });

  m.def(
      "default_testcase",
      [](const std::string& family) {
        return testcases::default_testcase(testcases::family_from_name(family));
      },
      py::arg("family"));
  m.def(
      "generate_suite",
      [](const std::string& family, int count, std::uint64_t seed) {
        testcases::SuiteSpec spec;
        spec.family = testcases::family_from_name(family);
        spec.count = count;
        spec.seed = seed;
        return testcases::generate_suite(spec);
      },
      py::arg("family") = "wedge", py::arg("count") = 32, py::arg("seed") = 0);
  m.def("public_view", &testcases::public_view);

  // --- harness and grading -----------------------------------------------------
  py::class_<harness::ErrorEvent>(m, "ErrorEvent")
      .def_readonly("level", &harness::ErrorEvent::level)
      .def_readonly("sample", &harness::ErrorEvent::sample)
      .def_readonly("description", &harness::ErrorEvent::description);

  py::class_<harness::Trajectory>(m, "Trajectory")
      .def_readonly("times", &harness::Trajectory::times)
      .def_property_readonly("true_states",
                             [](const harness::Trajectory& traj) {
                               Eigen::MatrixXd states(traj.true_states.size(),
                                                      8);
                               for (size_t i = 0; i < traj.true_states.size();
                                    ++i)
                                 states.row(static_cast<Eigen::Index>(i)) =
                                     traj.true_states[i].vec().transpose();
                               return states;
                             })
      .def_readonly("measurements", &harness::Trajectory::measurements)
      .def_readonly("estimates", &harness::Trajectory::estimates)
      .def_readonly("references", &harness::Trajectory::references)
      .def_readonly("inputs", &harness::Trajectory::inputs)
      .def_readonly("solver_time_per_sample",
                    &harness::Trajectory::solver_time_per_sample)
      .def_readonly("error_events", &harness::Trajectory::error_events)
      .def_readonly("truncated", &harness::Trajectory::truncated);

  m.def(
      "simulate",
      [](const testcases::Testcase& tc, const std::string& controller,
         double ux_disturbance, double uy_disturbance) {
        const auto hooks = controllers::make_controller(
            controllers::corpus_config(controller), testcases::public_view(tc));
        harness::SimulateOptions options;
        options.input_disturbance = {ux_disturbance, uy_disturbance};
        return harness::simulate(tc, hooks, options);
      },
      py::arg("testcase"), py::arg("controller") = "linear_hard",
      py::arg("ux_disturbance") = 0.0, py::arg("uy_disturbance") = 0.0,
      "Closed-loop run of a named reference controller on one testcase");

  m.def(
      "simulate_hooks",
      [](const testcases::Testcase& tc, py::object setup, py::object target,
         py::object estimator, py::object controller) {
        // Python hooks run on the calling thread; no watchdog applies.
        const auto hooks =
            hooks_from_python(setup, target, estimator, controller);
        return harness::simulate(tc, hooks);
      },
      py::arg("testcase"), py::arg("setup"), py::arg("target_generator"),
      py::arg("state_estimator"), py::arg("mp_controller"),
      "Closed-loop run of a controller written as four Python callables");

  py::class_<grading::Violation>(m, "Violation")
      .def_property_readonly("kind",
                             [](const grading::Violation& v) {
                               return grading::violation_kind_name(v.kind);
                             })
      .def_property_readonly("subject",
                             [](const grading::Violation& v) {
                               return grading::subject_name(v.subject);
                             })
      .def_readonly("time", &grading::Violation::time)
      .def_readonly("magnitude", &grading::Violation::magnitude)
      .def_readonly("detail", &grading::Violation::detail);

  py::class_<grading::TestcaseGrade>(m, "TestcaseGrade")
      .def_readonly("testcase_name", &grading::TestcaseGrade::testcase_name)
      .def_readonly("violations", &grading::TestcaseGrade::violations)
      .def_readonly("work", &grading::TestcaseGrade::work)
      .def_property_readonly("completed",
                             [](const grading::TestcaseGrade& g) {
                               return g.report.overall_ok;
                             })
      .def_property_readonly("equilibrium_ok",
                             [](const grading::TestcaseGrade& g) {
                               return g.report.equilibrium.ok;
                             })
      .def_property_readonly("input_interval_ok",
                             [](const grading::TestcaseGrade& g) {
                               return g.report.input_interval.ok;
                             })
      .def_property_readonly("work_ok",
                             [](const grading::TestcaseGrade& g) {
                               return g.report.work.ok;
                             })
      .def_property_readonly("constraints_ok",
                             [](const grading::TestcaseGrade& g) {
                               return g.report.constraints.ok;
                             });

  py::class_<grading::GradeOptions>(m, "GradeOptions")
      .def(py::init<>())
      .def_readwrite("legacy_equilibrium",
                     &grading::GradeOptions::legacy_equilibrium);
  m.def("grade", &grading::grade_testcase, py::arg("trajectory"),
        py::arg("testcase"), py::arg("options") = grading::GradeOptions{},
        "Specification verdict and violation listing for one run");

  m.def("compute_work", &grading::compute_work, py::arg("trajectory"),
        py::arg("params"));
  m.def("trajectory_svg", &grading::trajectory_svg, py::arg("testcase"),
        py::arg("trajectory"));
  m.def("corpus_names", &controllers::corpus_names);

  m.attr("__version__") = "0.1.0";
}
