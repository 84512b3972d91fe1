// bilearn command-line tool. Exit codes: 0 ok, 1 unexpected error, 2 bad
// configuration or input, 3 solver failure.

#include "bilearn/errors.hpp"
#include "bilearn/harness.hpp"
#include "bilearn/image_io.hpp"
#include "bilearn/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace bilearn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flags shared by the corpus subcommands; each overrides the config file.
struct ExperimentFlags {
  std::string config;
  std::string regularisers;
  std::string costs;
  std::vector<double> noise;
  std::optional<std::uint64_t> seed;
  std::string input_dir;
  std::string output_dir;
  std::optional<int> synthetic_count;
  std::optional<int> synthetic_size;
  bool deterministic = false;
  std::optional<unsigned> workers;
  std::string scaling;
  std::string warm_init;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "key = value experiment file");
    app.add_option("--regulariser", regularisers, "comma list, e.g. tv,tgv2,ictv");
    app.add_option("--cost", costs, "comma list of l22, huber-tv-grad");
    app.add_option("--noise-var", noise, "noise variances on the 0..255 scale")->delimiter(',');
    app.add_option("--seed", seed);
    app.add_option("--input-dir", input_dir, "directory of prepared .pgm images");
    app.add_option("--output-dir", output_dir);
    app.add_option("--synthetic-count", synthetic_count);
    app.add_option("--synthetic-size", synthetic_size);
    app.add_flag("--deterministic", deterministic, "write wall times as 0 for byte-identical reruns");
    app.add_option("--workers", workers);
    app.add_option("--scaling", scaling, "unit (default) or pixel");
    app.add_option("--warm-init", warm_init, "published (default) or swapped");
  }

  ExperimentConfig resolve(LearnMode mode) const {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_config(config);
    std::string overrides;
    if (!regularisers.empty()) overrides += "regularisers = " + regularisers + "\n";
    if (!costs.empty()) overrides += "costs = " + costs + "\n";
    if (!scaling.empty()) overrides += "scaling = " + scaling + "\n";
    if (!warm_init.empty()) overrides += "warm_init = " + warm_init + "\n";
    cfg = parse_config(overrides, std::move(cfg));
    if (!noise.empty()) cfg.noise_levels = noise;
    if (seed) cfg.seed = *seed;
    if (!input_dir.empty()) cfg.input_dir = input_dir;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (synthetic_count) cfg.synthetic_count = *synthetic_count;
    if (synthetic_size) cfg.synthetic_size = *synthetic_size;
    if (deterministic) cfg.deterministic = true;
    if (workers) cfg.workers = *workers;
    cfg.mode = mode;
    cfg.validate();
    return cfg;
  }
};

ImageGrid synthetic_by_name(const std::string& name, int size) {
  if (name == "piecewise") return piecewise_constant_image(size);
  if (name == "geometric") return geometric_image(size);
  throw ConfigError("unknown synthetic image '" + name + "' (piecewise or geometric)");
}

void print_record(const LearnRecord& rec) {
  std::printf("regulariser  %s\ncost         %s\nalpha        %.10g\n", std::string(to_string(rec.kind)).c_str(),
              std::string(to_string(rec.cost.kind)).c_str(), rec.alpha);
  if (rec.kind != RegulariserKind::TV) std::printf("beta         %.10g\n", rec.beta);
  std::printf("value        %.10g\nouter iters  %d (%s)\ninner solves %d, %d SSN iterations, %d unconverged\n",
              rec.value, rec.outer_iters, rec.stop_reason.c_str(), rec.inner_solves, rec.inner_iters,
              rec.inner_unconverged);
  for (std::size_t k = 0; k < rec.metrics.size(); ++k)
    std::printf("pair %zu       psnr %.4f  ssim %.5f  cost %.6g\n", k, rec.metrics[k].psnr, rec.metrics[k].ssim,
                rec.metrics[k].cost);
}

int run(int argc, char** argv) {
  CLI::App app{"Bilevel learning of TV, TGV2 and ICTV denoising parameters"};
  app.require_subcommand(1);

  // denoise
  auto* den = app.add_subcommand("denoise", "Denoise one image with fixed parameters");
  std::string den_in, den_out, den_reg = "tv", den_scaling = "unit";
  double den_alpha = 0.01, den_beta = 0.01, den_gamma = 100.0, den_noise = 0.0, den_tol = 1e-5;
  std::uint64_t den_seed = 1;
  den->add_option("--input", den_in, "clean or noisy image (.pgm or .f64)")->required();
  den->add_option("--output", den_out, "denoised image (.pgm or .f64)")->required();
  den->add_option("--regulariser", den_reg);
  den->add_option("--alpha", den_alpha);
  den->add_option("--beta", den_beta);
  den->add_option("--gamma", den_gamma);
  den->add_option("--scaling", den_scaling);
  den->add_option("--noise-var", den_noise, "add Gaussian noise before denoising");
  den->add_option("--seed", den_seed);
  den->add_option("--tol", den_tol);

  // learn
  auto* lrn = app.add_subcommand("learn", "Learn parameters for one image, or for each image of a corpus");
  std::string lrn_image, lrn_noisy, lrn_synth, lrn_csv, lrn_out;
  int lrn_size = 0;
  ExperimentFlags lrn_flags;
  lrn_flags.add_to(*lrn);
  lrn->add_option("--image", lrn_image, "clean image; learns a single pair");
  lrn->add_option("--noisy", lrn_noisy, "noisy counterpart of --image (otherwise synthesised)");
  lrn->add_option("--synthetic", lrn_synth, "piecewise or geometric instead of --image");
  lrn->add_option("--size", lrn_size, "edge of the --synthetic image");
  lrn->add_option("--csv", lrn_csv, "single-pair CSV output");
  lrn->add_option("--denoised", lrn_out, "single-pair denoised image output");

  // batch-learn
  auto* bat = app.add_subcommand("batch-learn", "Learn one parameter set jointly over a corpus");
  ExperimentFlags bat_flags;
  bat_flags.add_to(*bat);

  // compare
  auto* cmp = app.add_subcommand("compare", "Learn every regulariser per image and tabulate the statistics");
  ExperimentFlags cmp_flags;
  bool cmp_batch = false;
  cmp_flags.add_to(*cmp);
  cmp->add_flag("--batch", cmp_batch, "use batch learning instead of per-image learning");

  // prepare-corpus
  auto* prep = app.add_subcommand("prepare-corpus", "Resize the shortest edge and crop the top-left square");
  std::string prep_in, prep_out;
  int prep_edge = 128;
  prep->add_option("--input-dir", prep_in)->required();
  prep->add_option("--output-dir", prep_out)->required();
  prep->add_option("--edge", prep_edge);

  // metrics
  auto* met = app.add_subcommand("metrics", "PSNR, SSIM and cost of an image against a reference");
  std::string met_img, met_ref, met_scaling = "unit";
  double met_gamma = 100.0;
  met->add_option("--image", met_img)->required();
  met->add_option("--reference", met_ref)->required();
  met->add_option("--cost-gamma", met_gamma);
  met->add_option("--scaling", met_scaling);

  // synth
  auto* syn = app.add_subcommand("synth", "Write the built-in synthetic images");
  std::string syn_out;
  int syn_count = 10, syn_size = 64;
  std::uint64_t syn_seed = 1;
  syn->add_option("--output-dir", syn_out)->required();
  syn->add_option("--count", syn_count);
  syn->add_option("--size", syn_size);
  syn->add_option("--seed", syn_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*den) {
    Params p;
    p.alpha = den_alpha;
    p.beta = den_beta;
    p.gamma = den_gamma;
    p.scaling = parse_scaling(den_scaling);
    const RegulariserKind kind = parse_regulariser(den_reg);
    p.validate(kind);
    SSNConfig ssn;
    ssn.tol = den_tol;
    ImageGrid f = read_image(den_in);
    if (den_noise > 0.0) f = add_gaussian_noise(f, den_noise, den_seed);
    const DenoiseResult r = solve_denoise(f, kind, p, ssn);
    write_image(r.primal.image(), den_out);
    std::printf("iterations %d  residual %.3e  energy %.10g  %s\n", r.stats.iterations, r.stats.residual,
                energy(r.primal, f, p), r.stats.converged ? "converged" : "NOT converged");
    if (!r.stats.converged) throw SolverFailure("semismooth Newton did not converge");
    return 0;
  }

  if (*lrn) {
    const bool single = !lrn_image.empty() || !lrn_synth.empty();
    if (!single) {
      const auto cfg = lrn_flags.resolve(LearnMode::Individual);
      run_learn(cfg, &std::cerr);
      std::printf("wrote learn CSVs under %s\n", cfg.output_dir.string().c_str());
      return 0;
    }
    const auto cfg = lrn_flags.resolve(LearnMode::Individual);
    if (cfg.regularisers.size() != 1 || cfg.costs.size() != 1 || cfg.noise_levels.size() != 1)
      throw ConfigError("single-image learn takes exactly one regulariser, cost and noise level");
    TrainingPair pair;
    std::string id;
    if (!lrn_image.empty()) {
      pair.clean = read_image(lrn_image);
      id = fs::path(lrn_image).stem().string();
    } else {
      pair.clean = lrn_size > 0 ? synthetic_by_name(lrn_synth, lrn_size) : synthetic_by_name(lrn_synth, lrn_synth == "piecewise" ? 32 : 64);
      id = lrn_synth;
    }
    pair.noisy = lrn_noisy.empty() ? add_gaussian_noise(pair.clean, cfg.noise_levels[0], cfg.seed) : read_image(lrn_noisy);
    if (!pair.noisy.same_shape(pair.clean)) throw ConfigError("noisy and clean images differ in size");
    const auto& reg = cfg.regularisers[0];
    const LearnRecord rec = batch_learn({pair}, reg.kind, CostSpec{cfg.costs[0], cfg.cost_gamma}, cfg.learn);
    print_record(rec);
    std::printf("noisy psnr   %.4f\n", psnr(pair.noisy, pair.clean));
    LearnRow row{id, reg.label, reg.kind, cfg.costs[0], cfg.noise_levels[0], rec.alpha, rec.beta,
                 rec.metrics[0].cost, rec.metrics[0].ssim, rec.metrics[0].psnr, rec.outer_iters, rec.wall_time_s,
                 rec.converged, psnr(pair.noisy, pair.clean), ssim(pair.noisy, pair.clean), lrn_out};
    if (!lrn_out.empty()) write_image(rec.denoised[0], lrn_out);
    if (!lrn_csv.empty()) {
      std::ofstream out(lrn_csv, std::ios::binary);
      write_learn_csv(out, {row}, cfg.deterministic);
      if (!out) throw std::runtime_error("cannot write '" + lrn_csv + "'");
    }
    return 0;
  }

  if (*bat) {
    const auto cfg = bat_flags.resolve(LearnMode::Batch);
    const auto rows = run_learn(cfg, &std::cerr);
    for (const auto& t : summarise(rows, cfg.regularisers)) print_comparison(std::cout, t);
    return 0;
  }

  if (*cmp) {
    const auto cfg = cmp_flags.resolve(cmp_batch ? LearnMode::Batch : LearnMode::Individual);
    const auto res = run_compare(cfg, &std::cerr);
    for (const auto& t : res.tables) print_comparison(std::cout, t);
    const double dev = rescore_max_deviation(res.rows, cfg);
    std::printf("rescored from persisted images: max deviation %.3e\n", dev);
    return 0;
  }

  if (*prep) {
    if (prep_edge < 1) throw ConfigError("--edge must be positive");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(prep_in))
      if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .pgm files in '" + prep_in + "'");
    fs::create_directories(prep_out);
    for (const auto& f : files) write_pgm(prepare_square(read_pgm(f), prep_edge), fs::path(prep_out) / f.filename());
    std::printf("prepared %zu images\n", files.size());
    return 0;
  }

  if (*met) {
    const ImageGrid u = read_image(met_img), ref = read_image(met_ref);
    if (!u.same_shape(ref)) throw ConfigError("image and reference differ in size");
    Params p;
    p.scaling = parse_scaling(met_scaling);
    const double h = p.spacing(u.width, u.height);
    std::printf("psnr %s\nssim %s\nl22 %s\nhuber-tv-grad %s\n", format_metric(psnr(u, ref)).c_str(),
                format_metric(ssim(u, ref)).c_str(),
                format_metric(cost_value(u, ref, {CostKind::L22, met_gamma}, h)).c_str(),
                format_metric(cost_value(u, ref, {CostKind::HuberTVGrad, met_gamma}, h)).c_str());
    return 0;
  }

  if (*syn) {
    fs::create_directories(syn_out);
    write_pgm(piecewise_constant_image(32), fs::path(syn_out) / "piecewise.pgm");
    write_pgm(geometric_image(64), fs::path(syn_out) / "geometric.pgm");
    for (const auto& img : synthetic_corpus(syn_count, syn_size, syn_seed))
      write_pgm(img.clean, fs::path(syn_out) / (img.id + ".pgm"));
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeMismatch& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InnerSolveFailure& e) {
    std::cerr << "solver failure at alpha=" << e.alpha << " beta=" << e.beta << ": " << e.what() << '\n';
    return kExitSolver;
  } catch (const LinearSolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
