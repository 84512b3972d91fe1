#include "bilearn/errors.hpp"
#include "bilearn/image_io.hpp"
#include "bilearn/learner.hpp"
#include "bilearn/quality.hpp"
#include "bilearn/synthetic.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace bilearn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (height, width) float64 arrays.
ImageGrid to_grid(const Array& a) {
  if (a.ndim() != 2) throw ShapeMismatch("expected a 2-D array");
  ImageGrid g(int(a.shape(1)), int(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), g.values.data());
  return g;
}

Array to_array(const ImageGrid& g) {
  Array a({py::ssize_t(g.height), py::ssize_t(g.width)});
  std::copy(g.values.data(), g.values.data() + g.size(), a.mutable_data());
  return a;
}

Params make_params(double alpha, double beta, double gamma, double mu, const std::string& scaling) {
  Params p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.mu = mu;
  p.scaling = parse_scaling(scaling);
  return p;
}

py::dict denoise(const Array& f, const std::string& regulariser, double alpha, double beta, double gamma, double mu,
                 const std::string& scaling, double tol, int max_iters) {
  const ImageGrid img = to_grid(f);
  const RegulariserKind kind = parse_regulariser(regulariser);
  const Params p = make_params(alpha, beta, gamma, mu, scaling);
  SSNConfig cfg;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  DenoiseResult r;
  double e = 0.0;
  {
    py::gil_scoped_release nogil;
    r = solve_denoise(img, kind, p, cfg);
    e = energy(r.primal, img, p);
  }
  py::dict out;
  out["u"] = to_array(r.primal.image());
  out["converged"] = r.stats.converged;
  out["iterations"] = r.stats.iterations;
  out["residual"] = r.stats.residual;
  out["energy"] = e;
  return out;
}

py::dict learn(const std::vector<Array>& noisy, const std::vector<Array>& clean, const std::string& regulariser,
               const std::string& cost, double cost_gamma, const std::string& scaling, const std::string& warm_init,
               int max_outer_iters) {
  if (noisy.size() != clean.size() || noisy.empty())
    throw std::invalid_argument("noisy and clean must be non-empty lists of equal length");
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < noisy.size(); ++i) pairs.push_back({to_grid(noisy[i]), to_grid(clean[i])});
  LearnSettings s;
  s.base.scaling = parse_scaling(scaling);
  s.bfgs.max_outer_iters = max_outer_iters;
  if (warm_init == "swapped") s.warm_order = WarmInitOrder::Swapped;
  else if (warm_init != "published") throw ConfigError("warm_init must be 'published' or 'swapped'");
  const RegulariserKind kind = parse_regulariser(regulariser);
  const CostSpec spec{parse_cost(cost), cost_gamma};
  LearnRecord rec;
  {
    py::gil_scoped_release nogil;
    rec = batch_learn(pairs, kind, spec, s);
  }
  py::list trace, denoised, psnrs, ssims;
  for (const LearnIterate& it : rec.trace) {
    py::dict d;
    d["iteration"] = it.iteration;
    d["alpha"] = it.alpha;
    d["beta"] = it.beta;
    d["value"] = it.value;
    d["grad_norm"] = it.grad_norm;
    d["step_length"] = it.step_length;
    trace.append(d);
  }
  for (std::size_t k = 0; k < rec.denoised.size(); ++k) {
    denoised.append(to_array(rec.denoised[k]));
    psnrs.append(rec.metrics[k].psnr);
    ssims.append(rec.metrics[k].ssim);
  }
  py::dict out;
  out["alpha"] = rec.alpha;
  out["beta"] = rec.beta;
  out["value"] = rec.value;
  out["gradient"] = py::make_tuple(rec.gradient.g_alpha, rec.gradient.g_beta);
  out["outer_iters"] = rec.outer_iters;
  out["converged"] = rec.converged;
  out["stop_reason"] = rec.stop_reason;
  out["trace"] = trace;
  out["denoised"] = denoised;
  out["psnr"] = psnrs;
  out["ssim"] = ssims;
  return out;
}

}  // namespace

PYBIND11_MODULE(_bilearn, m) {
  m.doc() = "Bilevel learning of TV, TGV2 and ICTV denoising weights";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", PyExc_ValueError);
  py::register_exception<LinearSolveFailure>(m, "LinearSolveFailure", PyExc_RuntimeError);
  py::register_exception<InnerSolveFailure>(m, "InnerSolveFailure", PyExc_RuntimeError);

  m.def("denoise", &denoise, py::arg("f"), py::arg("regulariser") = "tv", py::arg("alpha") = 0.1,
        py::arg("beta") = 0.1, py::arg("gamma") = 100.0, py::arg("mu") = 1e-10, py::arg("scaling") = "unit",
        py::arg("tol") = 1e-5, py::arg("max_iters") = 200,
        "Semismooth Newton solve of the smoothed denoising problem. Returns a dict with 'u'.");
  m.def("learn", &learn, py::arg("noisy"), py::arg("clean"), py::arg("regulariser") = "tv", py::arg("cost") = "l22",
        py::arg("cost_gamma") = 100.0, py::arg("scaling") = "unit", py::arg("warm_init") = "published",
        py::arg("max_outer_iters") = 100,
        "Batch bilevel learning over lists of (noisy, clean) images.");

  m.def("psnr", [](const Array& u, const Array& ref) { return psnr(to_grid(u), to_grid(ref)); }, py::arg("u"),
        py::arg("ref"));
  m.def("ssim", [](const Array& u, const Array& ref) { return ssim(to_grid(u), to_grid(ref)); }, py::arg("u"),
        py::arg("ref"));
  m.def(
      "cost_value",
      [](const Array& u, const Array& f0, const std::string& cost, double cost_gamma, double spacing) {
        return cost_value(to_grid(u), to_grid(f0), {parse_cost(cost), cost_gamma}, spacing);
      },
      py::arg("u"), py::arg("f0"), py::arg("cost") = "l22", py::arg("cost_gamma") = 100.0, py::arg("spacing") = 1.0);
  m.def(
      "paired_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double level) {
        const TTestResult t = paired_t_test(a, b, level);
        py::dict d;
        d["t"] = t.t;
        d["df"] = t.df;
        d["critical"] = t.critical;
        d["p_value"] = t.p_value;
        d["significant"] = t.significant;
        d["direction"] = t.direction;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("level") = 0.95);
  m.def(
      "add_gaussian_noise",
      [](const Array& img, double variance255, std::uint64_t seed) {
        return to_array(add_gaussian_noise(to_grid(img), variance255, seed));
      },
      py::arg("img"), py::arg("variance255"), py::arg("seed"));
  m.def("piecewise_constant_image", [](int size) { return to_array(piecewise_constant_image(size)); },
        py::arg("size") = 32);
  m.def("geometric_image", [](int size) { return to_array(geometric_image(size)); }, py::arg("size") = 64);
  m.def("read_pgm", [](const std::filesystem::path& p) { return to_array(read_pgm(p)); }, py::arg("path"));
  m.def("write_pgm", [](const Array& img, const std::filesystem::path& p) { write_pgm(to_grid(img), p); },
        py::arg("img"), py::arg("path"));
}
