#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "roadlift/error.hpp"

using namespace roadlift::cli;

namespace {

void addOracle(CLI::App* cmd, OracleOptions& o) {
  cmd->add_option("--sigma-keypoint", o.sigma_keypoint, "Keypoint noise, normalized units")->check(CLI::NonNegativeNumber);
  cmd->add_option("--sigma-dims", o.sigma_dims, "Dimension noise, scaled units")->check(CLI::NonNegativeNumber);
  cmd->add_option("--sigma-alpha", o.sigma_alpha, "Observation angle noise, normalized units")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--confidence-scale", o.confidence_scale, "rho in exp(-r/rho)")->check(CLI::PositiveNumber);
  cmd->add_option("--oracle-seed", o.seed);
}

int dataErrorCode(const roadlift::Error& e) {
  using roadlift::ErrorCode;
  switch (e.code()) {
    case ErrorCode::FormatError:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::InfeasibleSpec:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonFiniteWeights:
      return kDataError;
    default:
      return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roadlift: lift 2D vehicle detections to 3D boxes on a triangulated road map"};
  app.set_config("--config", "", "TOML or INI file with option defaults");
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic benchmark dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed);
  g->add_option("--profile", gen.profile)->check(CLI::IsMember({"flat", "grade", "crest", "sag", "banked"}));
  g->add_option("--profile-parameter", gen.profile_parameter, "Grade, curvature (1/m) or cross slope");
  g->add_option("--spacing", gen.spacing, "Map sample spacing (m)")->check(CLI::PositiveNumber);
  g->add_option("--scenes-per-pose", gen.scenes_per_pose)->check(CLI::PositiveNumber);
  g->add_option("--vehicles", gen.vehicles, "Vehicles per scene")->check(CLI::PositiveNumber);
  g->add_option("--heading-jitter", gen.heading_jitter_deg, "Degrees")->check(CLI::NonNegativeNumber);
  g->add_flag("--snippets", gen.snippets, "Also write descriptor input tensors");

  LiftOptions lift;
  auto* l = app.add_subcommand("lift", "Lift detections to 3D boxes");
  l->add_option("--dataset", lift.dataset)->required()->check(CLI::ExistingDirectory);
  l->add_option("--out", lift.out, "Lifted boxes (JSON lines)")->required();
  l->add_option("--descriptor", lift.descriptor)->check(CLI::IsMember({"perfect", "noisy", "file", "net"}));
  l->add_option("--detections", lift.detections, "Detections file for --descriptor file")
      ->check(CLI::ExistingFile);
  l->add_option("--weights", lift.weights, "Weight bundle for --descriptor net")->check(CLI::ExistingFile);
  l->add_option("--seed", lift.seed, "Random weight seed when --weights is absent");
  addOracle(l, lift.oracle);
  l->add_option("--map-noise", lift.map_noise)->check(CLI::IsMember({"nominal", "elevation", "vertex"}));
  l->add_option("--map-sigma", lift.map_sigma, "Map elevation noise (m)")->check(CLI::NonNegativeNumber);
  l->add_option("--map-seed", lift.map_seed);
  l->add_option("--setup", lift.setup)->check(CLI::IsMember({"full", "no-centerlines", "bottom-only"}));

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Score lifted boxes against ground truth");
  e->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  e->add_option("--lifted", ev.lifted, "One or more lifted files")->check(CLI::ExistingFile);
  e->add_option("--out-prefix", ev.out_prefix, "Writes <prefix>.txt, .csv and optionally .svg");
  e->add_option("--metric", ev.metric)->check(CLI::IsMember({"bev", "3d"}));
  e->add_option("--footprint", ev.footprint)->check(CLI::IsMember({"hull", "yaw"}));
  e->add_flag("--self-check", ev.self_check, "Validate the dataset before scoring");
  e->add_flag("--svg", ev.svg, "Plot mean 3D IoU per range bin");

  AblateOptions ab;
  auto* a = app.add_subcommand("ablate", "Run the setup x map-noise comparison grid");
  a->add_option("--dataset", ab.dataset)->required()->check(CLI::ExistingDirectory);
  a->add_option("--out-prefix", ab.out_prefix)->required();
  a->add_option("--oracle", ab.oracle)->check(CLI::IsMember({"perfect", "noisy"}));
  addOracle(a, ab.noise);
  a->add_option("--map-sigmas", ab.map_sigmas, "Map noise columns (m)")->delimiter(',');
  a->add_option("--map-seed", ab.map_seed);
  a->add_flag("--vertex-perturbed", ab.vertex_perturbed, "Perturb TIN vertices instead of queried elevations");

  InspectNetOptions net;
  auto* n = app.add_subcommand("inspect-net", "Print the descriptor network layout");
  n->add_option("--weights", net.weights, "Load and validate a weight bundle")->check(CLI::ExistingFile);
  n->add_option("--write-random", net.write_random, "Write a random weight bundle");
  n->add_option("--seed", net.seed);
  n->add_option("--layout", net.layout)->check(CLI::IsMember({"full", "bottom"}));

  RenderOptions ren;
  auto* r = app.add_subcommand("render", "Draw ground truth and lifted boxes as SVG");
  r->add_option("--dataset", ren.dataset)->required()->check(CLI::ExistingDirectory);
  r->add_option("--lifted", ren.lifted)->check(CLI::ExistingFile);
  r->add_option("--out", ren.out, "Output directory")->required();
  r->add_option("--frame", ren.frame);
  r->add_option("--scale", ren.scale)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return runGenerate(gen, std::cout);
    if (l->parsed()) {
      lift.workers = workers;
      return runLift(lift, std::cout);
    }
    if (e->parsed()) return runEval(ev, std::cout);
    if (a->parsed()) {
      ab.workers = workers;
      return runAblate(ab, std::cout);
    }
    if (n->parsed()) return runInspectNet(net, std::cout);
    if (r->parsed()) return runRender(ren, std::cout);
  } catch (const roadlift::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return dataErrorCode(err);
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDataError;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
