#pragma once

#include "bilearn/learner.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bilearn {

enum class LearnMode { Individual, Batch };

std::string_view to_string(LearnMode mode);
LearnMode parse_mode(std::string_view name);

/// One regulariser column of an experiment. Two entries may share a kind
/// (aliasing the same engine); labels are unique.
struct RegulariserEntry {
  std::string label;
  RegulariserKind kind = RegulariserKind::TV;
};

struct ExperimentConfig {
  std::vector<RegulariserEntry> regularisers{
      {"tv", RegulariserKind::TV}, {"tgv2", RegulariserKind::TGV2}, {"ictv", RegulariserKind::ICTV}};
  std::vector<CostKind> costs{CostKind::L22};
  double cost_gamma = 100.0;
  std::vector<double> noise_levels{10.0};
  LearnMode mode = LearnMode::Individual;
  std::uint64_t seed = 1;
  LearnSettings learn;

  /// Directory of prepared PGM images; empty means the built-in synthetic corpus.
  std::filesystem::path input_dir;
  int synthetic_count = 10;
  int synthetic_size = 64;
  std::filesystem::path output_dir = "bilearn-out";

  /// Write wall_time_s as 0 so reruns produce byte-identical CSV files.
  bool deterministic = false;
  /// Worker threads for independent runs (0 = hardware concurrency).
  unsigned workers = 0;

  void validate() const;
};

/// key = value lines, '#' starts a comment, lists are comma separated.
/// Unknown keys and malformed values raise ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
/// Parses "tv, tgv2, copy:tv" into entries; duplicate labels get a "#n" suffix.
std::vector<RegulariserEntry> parse_regulariser_list(std::string_view text);

struct CorpusEntry {
  std::string id;
  ImageGrid clean;
};

/// Sorted *.pgm files of input_dir (id = file stem), or the synthetic corpus.
std::vector<CorpusEntry> load_corpus(const ExperimentConfig& cfg);

/// Noise seed for one (noise level, image) cell; identical for every regulariser.
std::uint64_t noise_seed(std::uint64_t base, std::size_t noise_index, std::size_t image_index);

/// One CSV row: [image, regulariser, cost, alpha, beta, value, ssim, psnr, outer_iters, wall_time_s].
struct LearnRow {
  std::string image;
  std::string regulariser;
  RegulariserKind kind = RegulariserKind::TV;
  CostKind cost = CostKind::L22;
  double noise_var = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double value = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  int outer_iters = 0;
  double wall_time_s = 0.0;
  bool converged = false;
  double noisy_psnr = 0.0;
  double noisy_ssim = 0.0;
  /// Relative to output_dir.
  std::string denoised_path;
};

extern const char* const kLearnCsvHeader;

void write_learn_csv(std::ostream& out, const std::vector<LearnRow>& rows, bool deterministic);
std::vector<LearnRow> read_learn_csv(std::istream& in);

/// Output layout under output_dir:
///   data/<image>.clean.f64, data/var<v>/<image>.noisy.f64
///   denoised/var<v>/<cost>/<label>/<image>.f64 (+ .pgm preview)
///   learn_<cost>_var<v>_<mode>.csv
/// Rows come back sorted by (noise, cost, image, regulariser order).
std::vector<LearnRow> run_learn(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (0 for a single image)
  double median = 0.0;
  int best = 0;         // images on which this regulariser wins the criterion
};

enum class Criterion { SSIM, PSNR, Cost };
std::string_view to_string(Criterion c);

struct PairTest {
  Criterion criterion = Criterion::SSIM;
  std::string a;
  std::string b;
  TTestResult result;  // on "a better than b" (cost is negated so larger is better)
};

struct ComparisonRow {
  std::string image;
  std::string best_ssim;
  std::string best_psnr;
  std::string best_cost;
  /// Set when the winner was picked from an exact tie (lowest label wins).
  bool tie_ssim = false;
  bool tie_psnr = false;
  bool tie_cost = false;
};

struct ComparisonTable {
  double noise_var = 0.0;
  CostKind cost = CostKind::L22;
  std::vector<std::string> labels;
  /// summaries[criterion][label index]
  std::vector<std::vector<MetricSummary>> summaries;
  std::vector<PairTest> tests;
  /// Per criterion, e.g. "ictv > tgv2 > tv" or "ictv, tgv2 > tv".
  std::vector<std::string> ordering;
  std::vector<ComparisonRow> rows;
};

/// Builds the tables from learn rows (one table per noise level and cost).
std::vector<ComparisonTable> summarise(const std::vector<LearnRow>& rows, const std::vector<RegulariserEntry>& regs);

/// Groups labels sorted by mean (best first); a '>' separates groups where every member
/// on the left is significantly better than the next label.
std::string ordering_string(const std::vector<std::string>& labels, const std::vector<double>& means,
                            const std::vector<PairTest>& tests, Criterion c);

/// compare_*.csv (criterion, regulariser, mean, std, median, best), ttest_*.csv,
/// best_*.csv (per-image winners) and ordering_*.txt in `dir`.
void write_comparison(const std::filesystem::path& dir, const ComparisonTable& t);
/// Human-readable table: mean/std/median/best per criterion, then the t-tests.
void print_comparison(std::ostream& out, const ComparisonTable& t);
/// File-name fragment for a noise level, e.g. "var20".
std::string noise_tag(double noise_var);

struct CompareResult {
  std::vector<LearnRow> rows;
  std::vector<ComparisonTable> tables;
};

/// run_learn, then summarise and write_comparison into output_dir.
CompareResult run_compare(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Recomputes ssim/psnr/cost of each row from the persisted images; returns the largest deviation.
double rescore_max_deviation(const std::vector<LearnRow>& rows, const ExperimentConfig& cfg);

}  // namespace bilearn
