#include "bilearn/harness.hpp"

#include "bilearn/errors.hpp"
#include "bilearn/image_io.hpp"
#include "bilearn/parallel.hpp"
#include "bilearn/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace bilearn {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a number, got '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int to_int(std::string_view s) {
  Int v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError("expected a boolean, got '" + std::string(s) + "'");
}

void apply_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "regularisers" || key == "regularizers") {
    cfg.regularisers = parse_regulariser_list(value);
  } else if (key == "costs") {
    cfg.costs.clear();
    for (auto item : split(value, ',')) cfg.costs.push_back(parse_cost(item));
  } else if (key == "cost_gamma") {
    cfg.cost_gamma = to_double(value);
  } else if (key == "noise_levels" || key == "noise_var") {
    cfg.noise_levels.clear();
    for (auto item : split(value, ',')) cfg.noise_levels.push_back(to_double(item));
  } else if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "seed") {
    cfg.seed = to_int<std::uint64_t>(value);
  } else if (key == "input_dir") {
    cfg.input_dir = std::string(value);
  } else if (key == "output_dir") {
    cfg.output_dir = std::string(value);
  } else if (key == "synthetic_count") {
    cfg.synthetic_count = to_int<int>(value);
  } else if (key == "synthetic_size") {
    cfg.synthetic_size = to_int<int>(value);
  } else if (key == "deterministic") {
    cfg.deterministic = to_bool(value);
  } else if (key == "workers") {
    cfg.workers = to_int<unsigned>(value);
  } else if (key == "gamma") {
    cfg.learn.base.gamma = to_double(value);
  } else if (key == "mu") {
    cfg.learn.base.mu = to_double(value);
  } else if (key == "scaling") {
    cfg.learn.base.scaling = parse_scaling(value);
  } else if (key == "warm_init") {
    if (value == "published") cfg.learn.warm_order = WarmInitOrder::AsPublished;
    else if (value == "swapped") cfg.learn.warm_order = WarmInitOrder::Swapped;
    else throw ConfigError("warm_init must be 'published' or 'swapped'");
  } else if (key == "ssn.tol") {
    cfg.learn.ssn.tol = to_double(value);
  } else if (key == "ssn.max_iters") {
    cfg.learn.ssn.max_iters = to_int<int>(value);
  } else if (key == "bfgs.rho") {
    cfg.learn.bfgs.rho = to_double(value);
  } else if (key == "bfgs.armijo_c") {
    cfg.learn.bfgs.armijo_c = to_double(value);
  } else if (key == "bfgs.theta") {
    cfg.learn.bfgs.theta = to_double(value);
  } else if (key == "bfgs.Theta") {
    cfg.learn.bfgs.Theta = to_double(value);
  } else if (key == "bfgs.max_outer_iters") {
    cfg.learn.bfgs.max_outer_iters = to_int<int>(value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

std::string fmt(double v) { return format_metric(v); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string csv_name(std::string_view prefix, CostKind cost, double noise_var, std::string_view suffix) {
  std::string s(prefix);
  s += '_';
  s += to_string(cost);
  s += '_';
  s += noise_tag(noise_var);
  s += suffix;
  return s;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1));
}

// Larger is better for every criterion after this map.
double goodness(const LearnRow& r, Criterion c) {
  switch (c) {
    case Criterion::SSIM: return r.ssim;
    case Criterion::PSNR: return r.psnr;
    default: return -r.value;
  }
}

double raw_metric(const LearnRow& r, Criterion c) {
  switch (c) {
    case Criterion::SSIM: return r.ssim;
    case Criterion::PSNR: return r.psnr;
    default: return r.value;
  }
}

constexpr Criterion kCriteria[] = {Criterion::SSIM, Criterion::PSNR, Criterion::Cost};

bool significantly_better(const std::vector<PairTest>& tests, Criterion c, const std::string& x,
                          const std::string& y) {
  for (const PairTest& t : tests) {
    if (t.criterion != c) continue;
    if (t.a == x && t.b == y) return t.result.significant && t.result.direction > 0;
    if (t.a == y && t.b == x) return t.result.significant && t.result.direction < 0;
  }
  return false;
}

}  // namespace

std::string_view to_string(LearnMode mode) { return mode == LearnMode::Individual ? "individual" : "batch"; }

LearnMode parse_mode(std::string_view name) {
  if (name == "individual") return LearnMode::Individual;
  if (name == "batch") return LearnMode::Batch;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::SSIM: return "ssim";
    case Criterion::PSNR: return "psnr";
    default: return "cost";
  }
}

void ExperimentConfig::validate() const {
  if (regularisers.empty()) throw ConfigError("no regularisers selected");
  if (costs.empty()) throw ConfigError("no costs selected");
  if (noise_levels.empty()) throw ConfigError("no noise levels selected");
  for (double v : noise_levels)
    if (!(v >= 0.0)) throw ConfigError("noise levels must be non-negative");
  std::set<std::string> labels;
  for (const auto& r : regularisers)
    if (r.label.empty() || !labels.insert(r.label).second) throw ConfigError("regulariser labels must be unique");
  std::set<std::pair<double, CostKind>> cells;
  for (double v : noise_levels)
    for (CostKind c : costs)
      if (!cells.insert({v, c}).second) throw ConfigError("duplicate noise level or cost");
  if (!(cost_gamma > 0.0)) throw ConfigError("cost_gamma must be positive");
  if (input_dir.empty() && (synthetic_count < 1 || synthetic_size < 8))
    throw ConfigError("synthetic corpus needs count >= 1 and size >= 8");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
  try {
    learn.ssn.validate();
    learn.bfgs.validate();
    Params p = learn.base;
    p.validate(RegulariserKind::TGV2);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<RegulariserEntry> parse_regulariser_list(std::string_view text) {
  std::vector<RegulariserEntry> out;
  std::map<std::string, int> seen;
  for (auto item : split(text, ',')) {
    if (item.empty()) throw ConfigError("empty regulariser entry");
    // "label:kind" aliases an engine under a new label.
    std::string label(item);
    std::string_view kind_name = item;
    if (const auto colon = item.find(':'); colon != std::string_view::npos) {
      label = std::string(trim(item.substr(0, colon)));
      kind_name = trim(item.substr(colon + 1));
    }
    RegulariserEntry e{label, parse_regulariser(kind_name)};
    if (const int n = seen[e.label]++; n > 0) e.label += "#" + std::to_string(n + 1);
    out.push_back(std::move(e));
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<CorpusEntry> load_corpus(const ExperimentConfig& cfg) {
  std::vector<CorpusEntry> out;
  if (cfg.input_dir.empty()) {
    for (auto& img : synthetic_corpus(cfg.synthetic_count, cfg.synthetic_size, cfg.seed))
      out.push_back({std::move(img.id), std::move(img.clean)});
    return out;
  }
  if (!fs::is_directory(cfg.input_dir)) throw ConfigError("input_dir '" + cfg.input_dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg.input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .pgm files in '" + cfg.input_dir.string() + "'");
  for (const auto& f : files) out.push_back({f.stem().string(), read_pgm(f)});
  return out;
}

std::uint64_t noise_seed(std::uint64_t base, std::size_t noise_index, std::size_t image_index) {
  // SplitMix64 finaliser over the packed cell index.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (1 + (std::uint64_t(noise_index) << 32 | image_index));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string noise_tag(double noise_var) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "var%g", noise_var);
  return buf;
}

const char* const kLearnCsvHeader =
    "image,regulariser,cost,alpha,beta,value,ssim,psnr,outer_iters,wall_time_s,"
    "noise_var,converged,noisy_psnr,noisy_ssim,denoised_path";

void write_learn_csv(std::ostream& out, const std::vector<LearnRow>& rows, bool deterministic) {
  out << kLearnCsvHeader << '\n';
  for (const LearnRow& r : rows) {
    out << r.image << ',' << r.regulariser << ',' << to_string(r.cost) << ',' << fmt(r.alpha) << ',' << fmt(r.beta)
        << ',' << fmt(r.value) << ',' << fmt(r.ssim) << ',' << fmt(r.psnr) << ',' << r.outer_iters << ','
        << fmt(deterministic ? 0.0 : r.wall_time_s) << ',' << fmt(r.noise_var) << ',' << (r.converged ? 1 : 0)
        << ',' << fmt(r.noisy_psnr) << ',' << fmt(r.noisy_ssim) << ',' << r.denoised_path << '\n';
  }
}

std::vector<LearnRow> read_learn_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kLearnCsvHeader) throw ParseError("unexpected learn CSV header", 0);
  std::vector<LearnRow> rows;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const std::size_t here = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 15) throw ParseError("learn CSV row needs 15 fields", here);
    try {
      LearnRow r;
      r.image = std::string(f[0]);
      r.regulariser = std::string(f[1]);
      const std::string_view base = std::string_view(r.regulariser).substr(0, r.regulariser.find('#'));
      try {
        r.kind = parse_regulariser(base);
      } catch (const ConfigError&) {
        r.kind = RegulariserKind::TV;  // custom label; the engine is not recoverable from the CSV
      }
      r.cost = parse_cost(f[2]);
      r.alpha = parse_metric(std::string(f[3]));
      r.beta = parse_metric(std::string(f[4]));
      r.value = parse_metric(std::string(f[5]));
      r.ssim = parse_metric(std::string(f[6]));
      r.psnr = parse_metric(std::string(f[7]));
      r.outer_iters = to_int<int>(f[8]);
      r.wall_time_s = parse_metric(std::string(f[9]));
      r.noise_var = parse_metric(std::string(f[10]));
      r.converged = f[11] == "1";
      r.noisy_psnr = parse_metric(std::string(f[12]));
      r.noisy_ssim = parse_metric(std::string(f[13]));
      r.denoised_path = std::string(f[14]);
      rows.push_back(std::move(r));
    } catch (const ParseError&) {
      throw ParseError("malformed number in learn CSV", here);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), here);
    }
  }
  return rows;
}

std::vector<LearnRow> run_learn(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const fs::path out_dir = cfg.output_dir;
  ensure_dir(out_dir / "data");
  const auto corpus = load_corpus(cfg);
  for (const auto& c : corpus) write_f64(c.clean, out_dir / "data" / (c.id + ".clean.f64"));

  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *log << msg << std::endl;
  };

  std::vector<LearnRow> all;
  for (std::size_t ni = 0; ni < cfg.noise_levels.size(); ++ni) {
    const double var = cfg.noise_levels[ni];
    const std::string tag = noise_tag(var);
    ensure_dir(out_dir / "data" / tag);
    std::vector<TrainingPair> pairs;
    std::vector<MetricReport> noisy_metrics;
    for (std::size_t ii = 0; ii < corpus.size(); ++ii) {
      ImageGrid noisy = add_gaussian_noise(corpus[ii].clean, var, noise_seed(cfg.seed, ni, ii));
      write_f64(noisy, out_dir / "data" / tag / (corpus[ii].id + ".noisy.f64"));
      noisy_metrics.push_back({psnr(noisy, corpus[ii].clean), ssim(noisy, corpus[ii].clean), 0.0});
      pairs.push_back({std::move(noisy), corpus[ii].clean});
    }

    for (CostKind cost_kind : cfg.costs) {
      const CostSpec cost{cost_kind, cfg.cost_gamma};
      const std::size_t R = cfg.regularisers.size();
      const std::size_t I = corpus.size();
      std::vector<LearnRow> rows(I * R);
      const fs::path den_root = fs::path("denoised") / tag / std::string(to_string(cost_kind));
      for (const auto& reg : cfg.regularisers) ensure_dir(out_dir / den_root / reg.label);

      auto fill_row = [&](std::size_t ii, std::size_t ri, const LearnRecord& rec, std::size_t pair_index) {
        LearnRow& row = rows[ii * R + ri];
        const auto& reg = cfg.regularisers[ri];
        const fs::path rel = den_root / reg.label / (corpus[ii].id + ".f64");
        write_f64(rec.denoised[pair_index], out_dir / rel);
        write_pgm(rec.denoised[pair_index], fs::path(out_dir / rel).replace_extension(".pgm"));
        row.image = corpus[ii].id;
        row.regulariser = reg.label;
        row.kind = reg.kind;
        row.cost = cost_kind;
        row.noise_var = var;
        row.alpha = rec.alpha;
        row.beta = rec.beta;
        row.value = rec.metrics[pair_index].cost;
        row.ssim = rec.metrics[pair_index].ssim;
        row.psnr = rec.metrics[pair_index].psnr;
        row.outer_iters = rec.outer_iters;
        row.wall_time_s = rec.wall_time_s;
        row.converged = rec.converged;
        row.noisy_psnr = noisy_metrics[ii].psnr;
        row.noisy_ssim = noisy_metrics[ii].ssim;
        row.denoised_path = rel.generic_string();
      };

      if (cfg.mode == LearnMode::Individual) {
        parallel_for(
            I * R,
            [&](std::size_t task) {
              const std::size_t ii = task / R, ri = task % R;
              const auto& reg = cfg.regularisers[ri];
              const LearnRecord rec = batch_learn({pairs[ii]}, reg.kind, cost, cfg.learn);
              fill_row(ii, ri, rec, 0);
              char msg[256];
              std::snprintf(msg, sizeof msg, "%s %s %s %s: alpha=%.6g beta=%.6g psnr=%.4f (noisy %.4f) its=%d%s",
                            tag.c_str(), std::string(to_string(cost_kind)).c_str(), corpus[ii].id.c_str(),
                            reg.label.c_str(), rec.alpha, rec.beta, rec.metrics[0].psnr, noisy_metrics[ii].psnr,
                            rec.outer_iters, rec.converged ? "" : " (not converged)");
              say(msg);
            },
            cfg.workers);
      } else {
        // One joint run per regulariser; the learner parallelises over pairs itself.
        for (std::size_t ri = 0; ri < R; ++ri) {
          const auto& reg = cfg.regularisers[ri];
          const LearnRecord rec = batch_learn(pairs, reg.kind, cost, cfg.learn);
          for (std::size_t ii = 0; ii < I; ++ii) fill_row(ii, ri, rec, ii);
          char msg[256];
          std::snprintf(msg, sizeof msg, "%s %s batch %s: alpha=%.6g beta=%.6g value=%.6g its=%d%s", tag.c_str(),
                        std::string(to_string(cost_kind)).c_str(), reg.label.c_str(), rec.alpha, rec.beta, rec.value,
                        rec.outer_iters, rec.converged ? "" : " (not converged)");
          say(msg);
        }
      }

      // Rows are already in (image, regulariser order); sort by image id for stable files.
      std::stable_sort(rows.begin(), rows.end(), [](const LearnRow& a, const LearnRow& b) { return a.image < b.image; });
      std::ostringstream csv;
      write_learn_csv(csv, rows, cfg.deterministic);
      write_text(out_dir / csv_name("learn", cost_kind, var, "_" + std::string(to_string(cfg.mode)) + ".csv"),
                 csv.str());
      all.insert(all.end(), rows.begin(), rows.end());
    }
  }
  return all;
}

std::string ordering_string(const std::vector<std::string>& labels, const std::vector<double>& means,
                            const std::vector<PairTest>& tests, Criterion c) {
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (means[a] != means[b]) return means[a] > means[b];
    return labels[a] < labels[b];
  });
  // Close a group once every member is significantly better than the next label.
  std::string out;
  std::vector<std::size_t> group;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0) {
      const bool split_here = std::all_of(group.begin(), group.end(), [&](std::size_t g) {
        return significantly_better(tests, c, labels[g], labels[idx[k]]);
      });
      out += split_here ? " > " : ", ";
      if (split_here) group.clear();
    }
    out += labels[idx[k]];
    group.push_back(idx[k]);
  }
  return out;
}

std::vector<ComparisonTable> summarise(const std::vector<LearnRow>& rows, const std::vector<RegulariserEntry>& regs) {
  // Groups in first-seen order of (noise, cost).
  std::vector<std::pair<double, CostKind>> keys;
  for (const auto& r : rows)
    if (std::find(keys.begin(), keys.end(), std::pair{r.noise_var, r.cost}) == keys.end())
      keys.emplace_back(r.noise_var, r.cost);

  std::vector<ComparisonTable> tables;
  for (const auto& [var, cost] : keys) {
    ComparisonTable t;
    t.noise_var = var;
    t.cost = cost;
    for (const auto& reg : regs) t.labels.push_back(reg.label);
    const std::size_t R = t.labels.size();

    // image -> row per label
    std::map<std::string, std::vector<const LearnRow*>> by_image;
    for (const auto& r : rows) {
      if (r.noise_var != var || r.cost != cost) continue;
      const auto it = std::find(t.labels.begin(), t.labels.end(), r.regulariser);
      if (it == t.labels.end()) continue;
      auto& slot = by_image[r.image];
      slot.resize(R, nullptr);
      slot[std::size_t(it - t.labels.begin())] = &r;
    }
    std::vector<std::string> images;
    for (const auto& [id, slot] : by_image) {
      if (std::any_of(slot.begin(), slot.end(), [](const LearnRow* p) { return p == nullptr; }))
        throw std::invalid_argument("image '" + id + "' is missing a regulariser result");
      images.push_back(id);
    }

    // Labels sorted lexicographically decide ties.
    std::vector<std::size_t> lex(R);
    std::iota(lex.begin(), lex.end(), 0);
    std::sort(lex.begin(), lex.end(), [&](std::size_t a, std::size_t b) { return t.labels[a] < t.labels[b]; });

    t.summaries.assign(3, std::vector<MetricSummary>(R));
    for (const auto& id : images) {
      const auto& slot = by_image[id];
      ComparisonRow cr{id, {}, {}, {}};
      for (int ci = 0; ci < 3; ++ci) {
        const Criterion c = kCriteria[ci];
        std::size_t best = lex[0];
        int ties = 1;
        for (std::size_t k = 1; k < R; ++k) {
          const double g = goodness(*slot[lex[k]], c), gb = goodness(*slot[best], c);
          if (g > gb) best = lex[k], ties = 1;
          else if (g == gb) ++ties;
        }
        ++t.summaries[ci][best].best;
        (c == Criterion::SSIM ? cr.best_ssim : c == Criterion::PSNR ? cr.best_psnr : cr.best_cost) = t.labels[best];
        (c == Criterion::SSIM ? cr.tie_ssim : c == Criterion::PSNR ? cr.tie_psnr : cr.tie_cost) = ties > 1;
      }
      t.rows.push_back(std::move(cr));
    }

    std::vector<std::vector<std::vector<double>>> good(3, std::vector<std::vector<double>>(R));
    for (int ci = 0; ci < 3; ++ci)
      for (std::size_t k = 0; k < R; ++k) {
        std::vector<double> raw;
        for (const auto& id : images) {
          raw.push_back(raw_metric(*by_image[id][k], kCriteria[ci]));
          good[ci][k].push_back(goodness(*by_image[id][k], kCriteria[ci]));
        }
        auto& s = t.summaries[ci][k];
        s.mean = mean_of(raw);
        s.stddev = stddev_of(raw);
        s.median = median_of(raw);
      }

    if (images.size() >= 2)
      for (int ci = 0; ci < 3; ++ci)
        for (std::size_t a = 0; a < R; ++a)
          for (std::size_t b = a + 1; b < R; ++b)
            t.tests.push_back({kCriteria[ci], t.labels[a], t.labels[b], paired_t_test(good[ci][a], good[ci][b])});

    for (int ci = 0; ci < 3; ++ci) {
      std::vector<double> means(R);
      for (std::size_t k = 0; k < R; ++k) means[k] = mean_of(good[ci][k]);
      t.ordering.push_back(ordering_string(t.labels, means, t.tests, kCriteria[ci]));
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

void write_comparison(const fs::path& dir, const ComparisonTable& t) {
  ensure_dir(dir);
  std::ostringstream stats;
  stats << "criterion,regulariser,mean,std,median,best\n";
  for (int ci = 0; ci < 3; ++ci)
    for (std::size_t k = 0; k < t.labels.size(); ++k) {
      const auto& s = t.summaries[ci][k];
      stats << to_string(kCriteria[ci]) << ',' << t.labels[k] << ',' << fmt(s.mean) << ',' << fmt(s.stddev) << ','
            << fmt(s.median) << ',' << s.best << '\n';
    }
  write_text(dir / csv_name("compare", t.cost, t.noise_var, ".csv"), stats.str());

  std::ostringstream tt;
  tt << "criterion,a,b,t,df,critical,p_value,significant,direction,degenerate\n";
  for (const auto& p : t.tests)
    tt << to_string(p.criterion) << ',' << p.a << ',' << p.b << ',' << fmt(p.result.t) << ',' << p.result.df << ','
       << fmt(p.result.critical) << ',' << fmt(p.result.p_value) << ',' << int(p.result.significant) << ','
       << p.result.direction << ',' << int(p.result.degenerate) << '\n';
  write_text(dir / csv_name("ttest", t.cost, t.noise_var, ".csv"), tt.str());

  std::ostringstream best;
  best << "image,best_ssim,best_psnr,best_cost,tie_ssim,tie_psnr,tie_cost\n";
  for (const auto& r : t.rows)
    best << r.image << ',' << r.best_ssim << ',' << r.best_psnr << ',' << r.best_cost << ',' << int(r.tie_ssim) << ','
         << int(r.tie_psnr) << ',' << int(r.tie_cost) << '\n';
  write_text(dir / csv_name("best", t.cost, t.noise_var, ".csv"), best.str());

  std::ostringstream ord;
  for (int ci = 0; ci < 3; ++ci) ord << to_string(kCriteria[ci]) << ": " << t.ordering[ci] << '\n';
  write_text(dir / csv_name("ordering", t.cost, t.noise_var, ".txt"), ord.str());
}

void print_comparison(std::ostream& out, const ComparisonTable& t) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << "noise variance " << t.noise_var << ", cost " << to_string(t.cost) << ", " << t.rows.size() << " images\n";
  std::size_t w = 12;
  for (const auto& l : t.labels) w = std::max(w, l.size() + 2);
  static const char* names[] = {"SSIM", "PSNR", "cost"};
  for (int ci = 0; ci < 3; ++ci) {
    out << "  " << names[ci] << '\n'
        << "    " << std::left << std::setw(int(w)) << "" << std::right << std::setw(12) << "mean" << std::setw(12)
        << "std" << std::setw(12) << "median" << std::setw(6) << "best" << '\n';
    for (std::size_t k = 0; k < t.labels.size(); ++k) {
      const auto& s = t.summaries[ci][k];
      out << "    " << std::left << std::setw(int(w)) << t.labels[k] << std::right << std::setprecision(5)
          << std::setw(12) << s.mean << std::setw(12) << s.stddev << std::setw(12) << s.median << std::setw(6)
          << s.best << '\n';
    }
    out << "    95% t-test: " << (t.tests.empty() ? "(no pairs)" : t.ordering[ci]) << '\n';
  }
  for (const auto& p : t.tests) {
    out << "    " << to_string(p.criterion) << ' ' << p.a << " vs " << p.b << ": t=" << std::setprecision(4)
        << p.result.t << " df=" << p.result.df << " p=" << p.result.p_value;
    if (p.result.significant) out << "  (" << (p.result.direction > 0 ? p.a : p.b) << " better)";
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

CompareResult run_compare(const ExperimentConfig& cfg, std::ostream* log) {
  CompareResult res;
  res.rows = run_learn(cfg, log);
  res.tables = summarise(res.rows, cfg.regularisers);
  for (const auto& t : res.tables) write_comparison(cfg.output_dir, t);
  return res;
}

double rescore_max_deviation(const std::vector<LearnRow>& rows, const ExperimentConfig& cfg) {
  auto dev = [](double a, double b) {
    if (a == b) return 0.0;  // covers matching infinities
    return std::abs(a - b);
  };
  double worst = 0.0;
  std::map<std::string, ImageGrid> clean;
  for (const auto& r : rows) {
    auto it = clean.find(r.image);
    if (it == clean.end())
      it = clean.emplace(r.image, read_f64(cfg.output_dir / "data" / (r.image + ".clean.f64"))).first;
    const ImageGrid u = read_f64(cfg.output_dir / r.denoised_path);
    const double h = cfg.learn.base.spacing(u.width, u.height);
    worst = std::max({worst, dev(psnr(u, it->second), r.psnr), dev(ssim(u, it->second), r.ssim),
                      dev(cost_value(u, it->second, CostSpec{r.cost, cfg.cost_gamma}, h), r.value)});
  }
  return worst;
}

}  // namespace bilearn
