// d3stereo command-line driver.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "d3stereo/io.hpp"
#include "d3stereo/metrics.hpp"
#include "d3stereo/pipeline.hpp"
#include "d3stereo/rbf.hpp"
#include "d3stereo/synth.hpp"

using namespace d3stereo;

namespace {

struct ConfigFlags {
  PipelineConfig config;
  std::string prc_mean = "union";
  std::string cost = "ncc";
  bool no_pt = false;

  void add_to(CLI::App& app) {
    app.add_option("--k", config.k, "pyramid depth")->capture_default_str();
    app.add_option("--dmax", config.d_max_full, "full-resolution disparity range")
        ->capture_default_str();
    app.add_option("--tau", config.tau)->capture_default_str();
    app.add_option("--kappa-d", config.kappa_d)->capture_default_str();
    app.add_option("--kappa-a", config.kappa_a)->capture_default_str();
    app.add_option("--tmax", config.t_max)->capture_default_str();
    app.add_option("--sigma1", config.sigma1)->capture_default_str();
    app.add_option("--sigma2", config.sigma2)->capture_default_str();
    app.add_option("--gamma", config.gamma)->capture_default_str();
    app.add_option("--lrdc-tol", config.lrdc_tol)->capture_default_str();
    app.add_option("--pt-offset", config.pt_offset)->capture_default_str();
    app.add_option("--block-radius", config.cost_mode.block_radius)->capture_default_str();
    app.add_option("--min-coarse-side", config.min_coarse_side)->capture_default_str();
    app.add_option("--prc-mean", prc_mean)
        ->check(CLI::IsMember({"union", "per-set"}))
        ->capture_default_str();
    app.add_option("--cost", cost)->check(CLI::IsMember({"ncc", "cosine"}))->capture_default_str();
    app.add_flag("--no-pt", no_pt, "disable the perspective transformation");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config;
    c.prc_mean = prc_mean == "per-set" ? PrcMean::PerSet : PrcMean::Union;
    c.cost_mode.kind = cost == "cosine" ? CostMode::Kind::CosineFeatures : CostMode::Kind::Ncc;
    c.use_pt = !no_pt;
    return c;
  }
};

// "a..b" -> {a, ..., b}; "a,b,c" -> {a, b, c}.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    for (int x = lo; x <= hi; ++x) out.push_back(x);
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

void print_report(const MetricReport& r) { std::cout << r.to_text(); }

int run_match(const std::string& left, const std::string& right, const std::string& out_stem,
              const std::string& gt, const std::string& feat_left, const std::string& feat_right,
              const std::string& debug_dir, const std::string& ledger, const std::string& dataset,
              const std::vector<double>& deltas, const PipelineConfig& config) {
  PipelineInputs in;
  in.left = io::read_image(left);
  in.right = io::read_image(right);
  if (!gt.empty()) in.ground_truth = io::read_pfm(gt).raster;
  if (!feat_left.empty()) in.features_left = io::read_feature_pyramid(feat_left);
  if (!feat_right.empty()) in.features_right = io::read_feature_pyramid(feat_right);
  if (!deltas.empty()) in.pep_deltas = deltas;
  if (!debug_dir.empty()) in.debug_dump = debug_dir;

  PipelineResult result = run_pipeline(in, config);
  result.manifest.left_path = left;
  result.manifest.right_path = right;
  result.manifest.ground_truth_path = gt;
  result.manifest.features_left_path = feat_left;
  result.manifest.features_right_path = feat_right;
  write_outputs(result, out_stem);
  std::cout << result.manifest.to_text();
  if (result.metrics) {
    print_report(*result.metrics);
    if (!ledger.empty()) {
      append_ledger_row(ledger, result.metrics->to_ledger_row(dataset, left + "|" + right,
                                                              result.manifest.config_hash));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"D3Stereo dense stereo matcher"};
  app.require_subcommand(1);

  // match
  auto* match = app.add_subcommand("match", "full coarse-to-fine pipeline");
  ConfigFlags match_flags;
  std::string m_left, m_right, m_out = "out", m_gt, m_fl, m_fr, m_debug, m_ledger,
                                 m_dataset = "unnamed";
  std::vector<double> m_deltas;
  match->add_option("left", m_left)->required()->check(CLI::ExistingFile);
  match->add_option("right", m_right)->required()->check(CLI::ExistingFile);
  match->add_option("-o,--out", m_out, "output stem")->capture_default_str();
  match->add_option("--gt", m_gt, "ground-truth PFM")->check(CLI::ExistingFile);
  match->add_option("--features-left", m_fl)->check(CLI::ExistingFile);
  match->add_option("--features-right", m_fr)->check(CLI::ExistingFile);
  match->add_option("--debug-dump", m_debug, "directory for per-level maps");
  match->add_option("--ledger", m_ledger, "results ledger to append to");
  match->add_option("--dataset", m_dataset)->capture_default_str();
  match->add_option("--delta", m_deltas, "PEP tolerance (repeatable)");
  match_flags.add_to(*match);

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "recursive bilateral filtering of a volume");
  std::string a_in, a_guide, a_out;
  RbfKernelParams a_params;
  aggregate->add_option("volume", a_in, "D3CV cost volume")->required()->check(CLI::ExistingFile);
  aggregate->add_option("guide", a_guide, "guide image")->required()->check(CLI::ExistingFile);
  aggregate->add_option("-o,--out", a_out)->required();
  aggregate->add_option("--tmax", a_params.t_max)->capture_default_str();
  aggregate->add_option("--kappa-a", a_params.kappa_a)->capture_default_str();
  aggregate->add_option("--sigma1", a_params.sigma1)->capture_default_str();
  aggregate->add_option("--sigma2", a_params.sigma2)->capture_default_str();

  // seeds
  auto* seeds = app.add_subcommand("seeds", "coarsest-level seeding only");
  ConfigFlags seeds_flags;
  std::string s_left, s_right, s_out = "seeds.pfm";
  seeds->add_option("left", s_left)->required()->check(CLI::ExistingFile);
  seeds->add_option("right", s_right)->required()->check(CLI::ExistingFile);
  seeds->add_option("-o,--out", s_out)->capture_default_str();
  seeds_flags.add_to(*seeds);

  // eval
  auto* eval = app.add_subcommand("eval", "metrics of an estimate against ground truth");
  std::string e_est, e_gt, e_left, e_right, e_ledger, e_dataset = "unnamed";
  std::vector<double> e_deltas;
  eval->add_option("estimate", e_est)->required()->check(CLI::ExistingFile);
  eval->add_option("ground_truth", e_gt)->required()->check(CLI::ExistingFile);
  eval->add_option("--delta", e_deltas, "PEP tolerance (repeatable)");
  eval->add_option("--left", e_left, "left image for reconstruction metrics")
      ->check(CLI::ExistingFile);
  eval->add_option("--right", e_right, "right image for reconstruction metrics")
      ->check(CLI::ExistingFile);
  eval->add_option("--ledger", e_ledger);
  eval->add_option("--dataset", e_dataset)->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted synthetic scene");
  std::string y_scene = "road", y_model = "3,0.05", y_prefix = "synth";
  int y_dmax = 64, y_width = 512, y_height = 512;
  std::uint64_t y_seed = 1;
  synth->add_option("--scene", y_scene)->check(CLI::IsMember({"road", "two-plane"}))
      ->capture_default_str();
  synth->add_option("--model", y_model, "alpha0,alpha1 of the road disparity")
      ->capture_default_str();
  synth->add_option("--dmax", y_dmax)->capture_default_str();
  synth->add_option("--width", y_width)->capture_default_str();
  synth->add_option("--height", y_height)->capture_default_str();
  synth->add_option("--seed", y_seed)->capture_default_str();
  synth->add_option("--out-prefix", y_prefix)->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "hyperparameter grid on a scene");
  ConfigFlags sweep_flags;
  std::string w_left, w_right, w_gt, w_tau = "1", w_kappa = "1", w_gamma;
  sweep->add_option("left", w_left)->required()->check(CLI::ExistingFile);
  sweep->add_option("right", w_right)->required()->check(CLI::ExistingFile);
  sweep->add_option("ground_truth", w_gt)->required()->check(CLI::ExistingFile);
  sweep->add_option("--tau-grid", w_tau, "e.g. 1..4")->capture_default_str();
  sweep->add_option("--kappa-d-grid", w_kappa, "e.g. 1..3")->capture_default_str();
  sweep->add_option("--gamma-grid", w_gamma, "e.g. 1.02,1.05,1.1");
  sweep_flags.add_to(*sweep);

  std::string stage = "usage";
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (e.get_exit_code() != 0) {
      std::cerr << "d3stereo " << (sub ? sub->get_name() : std::string("")) << ": usage error\n";
    }
    return app.exit(e);
  }

  try {
    if (*match) {
      stage = "match";
      return run_match(m_left, m_right, m_out, m_gt, m_fl, m_fr, m_debug, m_ledger, m_dataset,
                       m_deltas, match_flags.resolve());
    }
    if (*aggregate) {
      stage = "aggregate";
      const CostVolume volume = io::read_cost_volume(a_in);
      const GrayImage guide = io::read_image(a_guide);
      OpCounter counter;
      const CostVolume out = rbf_aggregate(volume, guide, a_params, &counter);
      io::write_cost_volume(out, a_out);
      std::cout << "multiply_adds=" << counter.multiply_adds << '\n';
      return 0;
    }
    if (*seeds) {
      stage = "seeds";
      const DisparityMap map = run_seeding(io::read_image(s_left), io::read_image(s_right),
                                           seeds_flags.resolve());
      io::write_pfm(map.to_raster(), s_out);
      std::cout << "level=" << map.level() << "\ndensity=" << density(map) << '\n';
      return 0;
    }
    if (*eval) {
      stage = "eval";
      const GrayImage est = io::read_pfm(e_est).raster;
      const GrayImage gt = io::read_pfm(e_gt).raster;
      MetricReport report =
          evaluate_disparity(est, gt, e_deltas.empty() ? std::vector<double>{1.0} : e_deltas);
      if (!e_left.empty() && !e_right.empty()) {
        const MetricReport recon =
            evaluate_reconstruction(io::read_image(e_left), io::read_image(e_right), est);
        report.psnr = recon.psnr;
        report.mse = recon.mse;
        report.ssim = recon.ssim;
      }
      print_report(report);
      if (!e_ledger.empty()) {
        append_ledger_row(e_ledger, report.to_ledger_row(e_dataset, e_est, "-"));
      }
      return 0;
    }
    if (*synth) {
      stage = "synth";
      SyntheticScene scene;
      if (y_scene == "road") {
        const auto coeffs = parse_grid(y_model);
        if (coeffs.size() != 2) throw Error(ErrorCode::InvalidConfig, "--model expects a0,a1");
        const RoadDisparityModel model{coeffs[0], coeffs[1]};
        const double top = model.at(0), bottom = model.at(y_height - 1);
        if (std::min(top, bottom) < 0 || std::max(top, bottom) > y_dmax) {
          throw Error(ErrorCode::InvalidConfig, "model disparities leave [0, dmax]");
        }
        scene = road_scene(y_width, y_height, model, y_seed);
      } else {
        const int w = y_width;
        scene = two_plane_scene(w, y_height, 5, 20, w / 3, 2 * w / 3, y_seed);
      }
      io::write_png(scene.left, y_prefix + ".left.png");
      io::write_png(scene.right, y_prefix + ".right.png");
      io::write_pfm(scene.ground_truth, y_prefix + ".gt.pfm");
      std::cout << y_prefix << ".left.png\n" << y_prefix << ".right.png\n"
                << y_prefix << ".gt.pfm\n";
      return 0;
    }
    if (*sweep) {
      stage = "sweep";
      PipelineInputs in;
      in.left = io::read_image(w_left);
      in.right = io::read_image(w_right);
      in.ground_truth = io::read_pfm(w_gt).raster;
      const PipelineConfig base = sweep_flags.resolve();
      const auto gammas = w_gamma.empty() ? std::vector<double>{base.gamma} : parse_grid(w_gamma);
      std::printf("%-6s %-8s %-8s %-10s %-10s %-9s %-10s\n", "tau", "kappa_d", "gamma", "epe",
                  "pep1", "density", "seconds");
      for (const double tau : parse_grid(w_tau)) {
        for (const double kappa : parse_grid(w_kappa)) {
          for (const double gamma : gammas) {
            PipelineConfig c = base;
            c.tau = static_cast<int>(tau);
            c.kappa_d = static_cast<int>(kappa);
            c.gamma = gamma;
            const PipelineResult r = run_pipeline(in, c);
            std::size_t finite = 0;
            for (const float d : r.disparity.data()) finite += std::isfinite(d) ? 1 : 0;
            std::printf("%-6d %-8d %-8.3f %-10.4f %-10.3f %-9.4f %-10.3f\n", c.tau, c.kappa_d,
                        c.gamma, *r.metrics->epe, r.metrics->pep.at(1.0),
                        static_cast<double>(finite) / r.disparity.data().size(),
                        r.manifest.total_seconds);
          }
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "d3stereo " << stage << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "d3stereo " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
