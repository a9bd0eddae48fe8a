// pectoral: batch segmentation, evaluation and phantom generation.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pectoral/commands.hpp"

namespace cli = pectoral::cli;

int main(int argc, char** argv) {
  CLI::App app{"Pectoral-muscle boundary reconstruction from edge-probability maps"};
  app.require_subcommand(1);

  std::string manifest_path, out_dir, fusion = "out2";
  std::optional<float> threshold;
  int arc_distance = 25;
  int jobs = 1;
  auto* segment = app.add_subcommand("segment", "Segment every item of a manifest");
  segment->add_option("--manifest", manifest_path, "Manifest file")->required();
  segment->add_option("--out-dir", out_dir, "Output directory")->required();
  segment->add_option("--fusion-source", fusion, "Map used for the path weights")
      ->check(CLI::IsMember({"out2", "out1"}));
  segment->add_option("--threshold", threshold, "Fixed binarisation threshold in [0,1]")
      ->check(CLI::Range(0.0f, 1.0f));
  segment->add_option("--arc-distance", arc_distance, "Skeleton length used to fit extensions")
      ->check(CLI::Range(2, 1 << 20));
  segment->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string pred_dir, gt_dir, csv_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted breast masks against ground truth");
  evaluate->add_option("--pred-dir", pred_dir, "Directory of <id>.breast.pgm predictions")->required();
  evaluate->add_option("--gt-dir", gt_dir, "Ground-truth directory")->required();
  evaluate->add_option("--out", csv_out, "CSV output path")->required();

  int count = 0;
  std::string scenario_name = "clean";
  std::uint64_t seed = 0;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Generate a phantom corpus");
  synth->add_option("--count", count, "Number of phantoms")->required();
  synth->add_option("--scenario", scenario_name, "clean | truncated | low-contrast | cluttered");
  synth->add_option("--seed", seed, "Corpus seed");
  synth->add_option("--out-dir", synth_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*segment) {
    pectoral::PipelineConfig cfg;
    cfg.fusion_source = fusion == "out1" ? pectoral::FusionSource::Out1 : pectoral::FusionSource::Out2;
    cfg.threshold_override = threshold;
    cfg.completion.arc_distance = arc_distance;
    cli::RunManifest manifest;
    try {
      manifest = cli::read_manifest(manifest_path, out_dir);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kExitUsage;
    }
    return cli::cmd_segment(manifest, cfg, jobs, std::cout, std::cerr);
  }
  if (*evaluate) return cli::cmd_evaluate(pred_dir, gt_dir, csv_out, std::cout, std::cerr);
  if (*synth) {
    const auto scenario = pectoral::parse_scenario(scenario_name);
    if (!scenario) {
      std::cerr << "error: unknown scenario '" << scenario_name << "'\n";
      return cli::kExitUsage;
    }
    return cli::cmd_synth(count, *scenario, seed, synth_dir, std::cout, std::cerr);
  }
  return cli::kExitUsage;
}
