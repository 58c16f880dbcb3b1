// Command-line front end: score one pair, score a manifest, or evaluate
// predictions against MOS.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "phm/phm.hpp"

namespace {

int report_error(const std::string& kind, const std::string& message, int code) {
  nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

int report_error(const phm::Error& e) {
  return report_error(std::string(phm::to_string(e.kind())), e.detail(), static_cast<int>(phm::classify(e.kind())));
}

phm::MetricConfig resolve_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("PHM_CONFIG"); env && *env) path = env;
  }
  return path.empty() ? phm::MetricConfig{} : phm::load_config(path);
}

phm::PointCloud load_with_warnings(const std::string& path) {
  std::vector<std::string> warnings;
  auto cloud = phm::load_ply(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << '\n';
  return cloud;
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw phm::Error(phm::ErrorKind::Io, "cannot write '" + out_path + "'");
  out << text;
  if (!out) throw phm::Error(phm::ErrorKind::Io, "write failed for '" + out_path + "'");
}

struct ScoreArgs {
  std::string ref, dist, config;
  bool plain = false;
  unsigned threads = 1;
};

int run_score(const ScoreArgs& a) {
  const auto config = resolve_config(a.config);
  const auto ref = load_with_warnings(a.ref);
  const auto dist = load_with_warnings(a.dist);
  const auto report = phm::phm_score(ref, dist, config, a.threads);
  if (report.status != phm::ReportStatus::Ok) {
    if (!a.plain) std::cout << phm::to_json(report).dump(2) << '\n';
    return report_error("NoValidPatches", report.message, static_cast<int>(phm::ErrorClass::Numerical));
  }
  if (a.plain) {
    std::cout << phm::format_double(*report.score) << '\n';
  } else {
    std::cout << phm::to_json(report).dump(2) << '\n';
  }
  return 0;
}

struct BatchArgs {
  std::string manifest, config, out;
  unsigned jobs = 1;
};

int run_batch(const BatchArgs& a) {
  const auto config = resolve_config(a.config);
  const auto manifest = phm::read_manifest(a.manifest);
  const auto results = phm::run_batch(manifest, config, a.jobs);
  write_output(a.out, phm::batch_csv(results));
  return 0;
}

struct EvalArgs {
  std::string predictions, out;
};

int run_eval(const EvalArgs& a) {
  const auto records = phm::read_eval_records(a.predictions);
  const auto fit = phm::fit_logistic(records);
  const auto summary = phm::correlation_suite(records, fit);
  write_output(a.out, phm::to_json(summary, fit).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-reference point cloud quality scoring"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score a distorted cloud against its reference");
  score_cmd->add_option("--ref", score.ref, "Reference PLY")->required();
  score_cmd->add_option("--dist", score.dist, "Distorted PLY")->required();
  score_cmd->add_option("--config", score.config, "JSON config (falls back to $PHM_CONFIG)");
  score_cmd->add_flag("--plain", score.plain, "Print only the score");
  score_cmd->add_option("--threads", score.threads, "Worker threads for the patch stage")->check(CLI::PositiveNumber);

  BatchArgs batch;
  auto* batch_cmd = app.add_subcommand("batch", "Score every pair listed in a manifest CSV");
  batch_cmd->add_option("--manifest", batch.manifest, "CSV with pair_id,ref_path,dist_path")->required();
  batch_cmd->add_option("--config", batch.config, "JSON config (falls back to $PHM_CONFIG)");
  batch_cmd->add_option("--jobs", batch.jobs, "Rows scored concurrently")->check(CLI::PositiveNumber);
  batch_cmd->add_option("--out", batch.out, "Output CSV (default: stdout)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Fit the logistic mapping and report PLCC/SROCC/RMSE");
  eval_cmd->add_option("--predictions,predictions", eval.predictions, "CSV with sample_id,mos,prediction")->required();
  eval_cmd->add_option("--out", eval.out, "Output JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), static_cast<int>(phm::ErrorClass::Precondition));
  }

  try {
    if (score_cmd->parsed()) return run_score(score);
    if (batch_cmd->parsed()) return run_batch(batch);
    return run_eval(eval);
  } catch (const phm::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), static_cast<int>(phm::ErrorClass::Numerical));
  }
}
