#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "monogp/data.hpp"
#include "monogp/diagnostics.hpp"
#include "monogp/errors.hpp"
#include "monogp/evaluation.hpp"
#include "monogp/inference.hpp"
#include "monogp/kernel.hpp"
#include "monogp/model.hpp"
#include "monogp/version.hpp"

#include "json.hpp"

namespace py = pybind11;
using namespace monogp;

namespace {

std::vector<std::size_t> default_groups()
{
  return {kDefaultGroups.begin(), kDefaultGroups.end()};
}

PosteriorSamples fit(const ObservationSet& obs, std::size_t chains, std::size_t warmup,
                     std::size_t draws, std::uint64_t seed)
{
  SamplerConfig cfg;
  cfg.chains = chains;
  cfg.warmup = warmup;
  cfg.draws = draws;
  cfg.seed = seed;
  py::gil_scoped_release release;
  return sample_hyperparameters(obs, PriorSpec{}, default_groups(), kDefaultGroupCount, cfg);
}

py::dict cv(const ObservationSet& obs, const std::string& scheme, bool with_derivatives,
            std::size_t chains, std::size_t warmup, std::size_t draws, std::size_t fold_warmup,
            std::size_t fold_draws, bool recondition, std::size_t tail_length, std::uint64_t seed)
{
  CvOptions o;
  o.full.chains = o.fold.chains = chains;
  o.full.warmup = warmup;
  o.full.draws = draws;
  o.full.seed = seed;
  o.fold.warmup = fold_warmup;
  o.fold.draws = fold_draws;
  o.fit = recondition ? FoldFit::recondition : FoldFit::refit;
  o.seed = seed + 11;
  const auto variant =
      with_derivatives ? ModelVariant::with_derivatives : ModelVariant::without_derivatives;
  EvalReport report;
  {
    py::gil_scoped_release release;
    report = run_cv(obs, CvScheme::parse(scheme, tail_length), variant, o);
  }
  std::ostringstream out;
  write_report_json(out, report);
  return py::module_::import("json").attr("loads")(out.str());
}

}  // namespace

PYBIND11_MODULE(_monogp, m)
{
  m.doc() = "Spatio-temporal GP regression with derivative sign constraints";
  m.attr("__version__") = kVersion;
  m.attr("TIME_DIM") = kTimeDim;
  m.attr("DIRAC_VARIANCE") = kDiracVariance;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<InitializationError>(m, "InitializationError", base.ptr());
  py::register_exception<DiagnosticError>(m, "DiagnosticError", base.ptr());
  py::register_exception<SchemeError>(m, "SchemeError", base.ptr());

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init([](double alpha, std::vector<double> lengthscales, double sigma) {
             auto hp = Hyperparameters::with_default_groups(alpha, std::move(lengthscales), sigma);
             hp.validate();
             return hp;
           }),
           py::arg("alpha"), py::arg("lengthscales"), py::arg("sigma"),
           "Five lengthscale groups over [h, s, i, sx, sy, t]; sx and sy share one.")
      .def_static("isotropic", &Hyperparameters::isotropic_groups, py::arg("dims"),
                  py::arg("alpha"), py::arg("lengthscales"), py::arg("sigma"))
      .def_readwrite("alpha", &Hyperparameters::alpha)
      .def_readwrite("lengthscales", &Hyperparameters::lengthscales)
      .def_readwrite("sigma", &Hyperparameters::sigma)
      .def_readonly("group_of_dim", &Hyperparameters::group_of_dim)
      .def("__repr__", [](const Hyperparameters& hp) {
        std::ostringstream s;
        s << "Hyperparameters(alpha=" << hp.alpha << ", sigma=" << hp.sigma << ")";
        return s.str();
      });

  py::class_<InputPoint>(m, "InputPoint")
      .def(py::init<std::vector<double>, std::size_t, std::size_t>(), py::arg("values"),
           py::arg("spatial_index") = 0, py::arg("time_index") = 0)
      .def_readwrite("values", &InputPoint::values)
      .def_readwrite("spatial_index", &InputPoint::spatial_index)
      .def_readwrite("time_index", &InputPoint::time_index);

  m.def("se_ard_cov", &se_ard_cov, py::arg("x1"), py::arg("x2"), py::arg("hp"));
  m.def(
      "cov_deriv_value",
      [](const InputPoint& x1, std::size_t g, const InputPoint& x2, const Hyperparameters& hp) {
        return cov_deriv_value({x1, g}, x2, hp);
      },
      py::arg("x1"), py::arg("wrt"), py::arg("x2"), py::arg("hp"));
  m.def(
      "cov_deriv_deriv",
      [](const InputPoint& x1, std::size_t g, const InputPoint& x2, std::size_t h,
         const Hyperparameters& hp) { return cov_deriv_deriv({x1, g}, {x2, h}, hp); },
      py::arg("x1"), py::arg("wrt1"), py::arg("x2"), py::arg("wrt2"), py::arg("hp"));
  m.def("kronecker_cov", &kronecker_cov, py::arg("spatial_inputs"), py::arg("times"),
        py::arg("hp"));

  m.def("log_normal_cdf", &log_normal_cdf, py::arg("x"));
  m.def(
      "log_lik_sign",
      [](const std::vector<int>& z, const std::vector<double>& fp, double v) {
        return log_lik_sign(z, fp, v);
      },
      py::arg("z"), py::arg("f_prime"), py::arg("v"));
  m.def(
      "log_lik_gaussian",
      [](const std::vector<double>& y, const std::vector<double>& f, double sigma) {
        return log_lik_gaussian(y, f, sigma);
      },
      py::arg("y"), py::arg("f"), py::arg("sigma"));

  py::class_<RawDataset>(m, "RawDataset")
      .def_property_readonly("locations", &RawDataset::locations)
      .def_property_readonly("times", &RawDataset::times)
      .def("__len__", [](const RawDataset& d) { return d.rows.size(); })
      .def("to_csv", [](const RawDataset& d) {
        std::ostringstream out;
        write_csv(out, d);
        return out.str();
      });

  py::class_<StandardizedDataset>(m, "StandardizedDataset")
      .def_readonly("locations", &StandardizedDataset::locations)
      .def_readonly("times", &StandardizedDataset::times)
      .def("__len__", [](const StandardizedDataset& d) { return d.rows.size(); })
      .def_property_readonly("points",
                             [](const StandardizedDataset& d) {
                               std::vector<InputPoint> p;
                               for (const auto& r : d.rows)
                                 p.push_back(r.point);
                               return p;
                             })
      .def_property_readonly("y", [](const StandardizedDataset& d) {
        std::vector<double> y;
        for (const auto& r : d.rows)
          y.push_back(r.y);
        return y;
      });

  py::class_<ObservationSet>(m, "ObservationSet")
      .def_property_readonly("regular_count",
                             [](const ObservationSet& o) { return o.regular.size(); })
      .def_property_readonly("zero_start_count",
                             [](const ObservationSet& o) { return o.zero_start.size(); })
      .def_property_readonly("sign_count", [](const ObservationSet& o) { return o.sign.size(); })
      .def_property_readonly("saturation_count",
                             [](const ObservationSet& o) { return o.saturation.size(); })
      .def_readwrite("strictness", &ObservationSet::strictness)
      .def("without_derivatives", &ObservationSet::without_derivatives);

  m.def("read_csv", py::overload_cast<const std::filesystem::path&>(&ingest), py::arg("path"));
  m.def(
      "parse_csv",
      [](const std::string& text) {
        std::istringstream in(text);
        return ingest(in);
      },
      py::arg("text"));
  m.def("standardize", &standardize, py::arg("raw"));
  m.def(
      "build_virtual_sets",
      [](const StandardizedDataset& ds, bool zero_start, std::vector<double> monotone_times,
         bool saturation, double strictness) {
        VirtualConfig c;
        c.zero_start = zero_start;
        c.monotone_times = std::move(monotone_times);
        c.saturation = saturation;
        c.strictness = strictness;
        return build_virtual_sets(ds, c);
      },
      py::arg("ds"), py::arg("zero_start") = true,
      py::arg("monotone_times") = std::vector<double>{6.0, 9.0}, py::arg("saturation") = false,
      py::arg("strictness") = kDefaultStrictness);
  m.def(
      "simulate",
      [](std::uint64_t seed, std::size_t locations, std::size_t time_points, double noise_sd) {
        SimulateConfig c;
        c.locations = locations;
        c.time_points = time_points;
        c.noise_sd = noise_sd;
        return simulate(c, seed);
      },
      py::arg("seed"), py::arg("locations") = 13, py::arg("time_points") = 11,
      py::arg("noise_sd") = SimulateConfig{}.noise_sd);
  m.def("simulate_gp_prior", &simulate_gp_prior, py::arg("locations"), py::arg("time_points"),
        py::arg("hp"), py::arg("seed"));

  py::class_<PosteriorSamples>(m, "PosteriorSamples")
      .def_property_readonly("chain_count",
                             [](const PosteriorSamples& s) { return s.chains.size(); })
      .def_property_readonly("draw_count", &PosteriorSamples::draw_count)
      .def_property_readonly("parameter_names", &PosteriorSamples::parameter_names)
      .def("parameter_chains", &PosteriorSamples::parameter_chains, py::arg("index"))
      .def("summary", [](const PosteriorSamples& s) {
        py::list out;
        for (const auto& p : summarize_parameters(s)) {
          py::dict d;
          d["name"] = p.name;
          d["mean"] = p.mean;
          d["sd"] = p.sd;
          d["mode"] = p.mode;
          d["q05"] = p.q05;
          d["q50"] = p.q50;
          d["q95"] = p.q95;
          d["rhat"] = p.rhat;
          d["ess"] = p.ess;
          out.append(d);
        }
        return out;
      });

  m.def("fit", &fit, py::arg("obs"), py::arg("chains") = 3, py::arg("warmup") = 1000,
        py::arg("draws") = 1000, py::arg("seed") = 1,
        "Posterior draws of (alpha, rho_1..rho_5, sigma) and the sign-site derivatives.");

  m.def(
      "predict",
      [](const PosteriorSamples& samples, const ObservationSet& obs,
         const std::vector<InputPoint>& points, bool latent, std::size_t max_draws,
         std::uint64_t seed) {
        std::vector<Site> test;
        for (const auto& p : points)
          test.push_back(Site::value(p));
        PredictOptions o;
        o.target = latent ? PredictTarget::latent : PredictTarget::observation;
        o.max_draws = max_draws;
        o.seed = seed;
        PredictiveDistribution d;
        {
          py::gil_scoped_release release;
          d = predict(samples, obs, test, o);
        }
        py::dict out;
        out["mean"] = d.mean;
        out["sd"] = d.sd;
        out["lower95"] = d.lower95;
        out["upper95"] = d.upper95;
        return out;
      },
      py::arg("samples"), py::arg("obs"), py::arg("points"), py::arg("latent") = false,
      py::arg("max_draws") = 400, py::arg("seed") = 7);

  m.def(
      "condition_gaussian",
      [](const ObservationSet& obs, const std::vector<InputPoint>& points,
         const Hyperparameters& hp) {
        std::vector<Site> test;
        for (const auto& p : points)
          test.push_back(Site::value(p));
        const auto d = condition_gaussian(obs, test, hp);
        return py::make_tuple(d.mean, d.covariance);
      },
      py::arg("obs"), py::arg("points"), py::arg("hp"),
      "Exact conditional mean and covariance of latent values for fixed hyperparameters.");

  m.def("cross_validate", &cv, py::arg("obs"), py::arg("scheme") = "cv2",
        py::arg("with_derivatives") = true, py::arg("chains") = 2, py::arg("warmup") = 500,
        py::arg("draws") = 500, py::arg("fold_warmup") = 150, py::arg("fold_draws") = 250,
        py::arg("recondition") = false, py::arg("tail_length") = 7, py::arg("seed") = 1,
        "Cross-validated ELPD and MSE; returns the JSON report as a dict.");

  m.def(
      "split_rhat", [](const std::vector<std::vector<double>>& c) { return split_rhat(c).value; },
      py::arg("chains"));
  m.def("effective_sample_size", &effective_sample_size, py::arg("chains"));
  m.def("ks_distance_uniform", &ks_distance_uniform, py::arg("values"));
}
