// phaseflow: phase retrieval from Fourier modulus data.
//
// Subcommands: simulate (noisy measurement synthesis), template (initial
// image from the data alone), retrieve (indirect diffeomorphic registration
// against modulus data), register-direct (image-to-image registration),
// erhio (ER/HIO with shrinkwrap), compare (score runs against a truth image).
//
// Every run directory gets a manifest.txt of key = value lines; feeding it
// back with --config reproduces the run byte-for-byte (timing.txt aside).
// Command-line flags override config values.
//
// Exit codes: 0 success, 2 usage error, 3 input format error, 4 numerical
// degeneracy (flat data, empty support, zero mass).

#include <algorithm>
#include <cstdio>
#include <set>

#include <CLI11.hpp>

#include "phaseflow/cli_runners.hpp"

namespace {

using namespace phaseflow;
using namespace phaseflow::cli;

// Pull "--config FILE" out of the arg list and splice the manifest's entries
// in as ordinary options right after the subcommand name, so explicit flags
// (parsed later, TakeLast) win. `flag_keys` lists boolean options, which are
// stored as 0/1 in manifests but spelled --name / --no-name on the command
// line.
std::vector<std::string> splice_config(std::vector<std::string> args,
                                       const std::set<std::string>& flag_keys) {
  if (args.empty()) return args;
  std::string config_path;
  std::vector<std::string> rest;
  rest.push_back(args[0]);
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  Manifest mf = read_manifest(config_path);
  std::vector<std::string> out;
  out.push_back(rest[0]);
  for (const auto& [key, value] : mf.entries) {
    if (flag_keys.count(key)) {
      bool on = value == "1" || value == "true";
      out.push_back((on ? "--" : "--no-") + key);
    } else {
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

void take_last(CLI::App* sub) {
  for (CLI::Option* o : sub->get_options())
    if (o->get_expected_max() == 1) o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase retrieval via indirect diffeomorphic registration"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* s_sim = app.add_subcommand("simulate", "synthesize a noisy modulus measurement");
  s_sim->add_option("--target", sim.target, "truth image (GridFile)")->required();
  s_sim->add_option("--out", sim.out, "output directory")->required();
  s_sim->add_option("--max-intensity", sim.max_intensity, "peak intensity after scaling");
  s_sim->add_flag("--poisson,!--no-poisson", sim.poisson, "Poisson (shot) noise");
  s_sim->add_flag("--quantize,!--no-quantize", sim.quantize, "round intensities to counts");
  s_sim->add_option("--gaussian-std", sim.gaussian_std, "additive Gaussian std on intensity");
  s_sim->add_option("--target-snr", sim.target_snr,
                    "calibrate the Gaussian std to hit this SNR (dB); overrides --gaussian-std");
  s_sim->add_option("--seed", sim.seed, "noise RNG seed");
  s_sim->add_flag("--png,!--no-png", sim.png, "write a log-scaled intensity PNG");

  TemplateOpts tpl;
  CLI::App* s_tpl = app.add_subcommand("template", "estimate an initial image from data");
  s_tpl->add_option("--data", tpl.data, "measured amplitudes (GridFile)")->required();
  s_tpl->add_option("--out", tpl.out, "output directory")->required();
  s_tpl->add_option("--mode", tpl.mode, "action the template is meant for")
      ->check(CLI::IsMember({"geometric", "mass"}));
  s_tpl->add_option("--G", tpl.G, "autocorrelation/support size ratio (geometric mode)");
  s_tpl->add_option("--shape", tpl.shape, "template shape")
      ->check(CLI::IsMember({"disk", "rect"}));
  s_tpl->add_option("--threshold", tpl.threshold,
                    "autocorrelation support threshold (fraction of peak; use 5e-2 for noisy data)");
  s_tpl->add_option("--aspect", tpl.aspect, "rectangle aspect ratio");
  s_tpl->add_flag("--png,!--no-png", tpl.png, "write a template PNG");

  auto add_reg_options = [](CLI::App* sub, RetrieveOpts& o) {
    sub->add_option("--template", o.tmpl, "initial image (GridFile)")->required();
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--action", o.action, "deformation action")
        ->check(CLI::IsMember({"geometric", "mass"}));
    sub->add_option("--similarity", o.similarity, "data term")
        ->check(CLI::IsMember({"l2", "cc"}));
    sub->add_option("--sigma", o.sigma, "regularization weight");
    sub->add_option("--eta", o.eta, "kernel smoothing weight");
    sub->add_option("--gamma", o.gamma, "kernel identity weight");
    sub->add_option("--steps", o.steps, "time discretization steps");
    sub->add_option("--cap", o.cap, "per-iteration displacement cap (fraction of domain)");
    sub->add_option("--iters", o.iters, "gradient iterations");
    sub->add_flag("--half-density,!--no-half-density", o.half_density,
                  "act on half-densities in the mass-preserving mode");
    sub->add_flag("--png,!--no-png", o.png, "write a reconstruction PNG");
  };

  RetrieveOpts ret;
  CLI::App* s_ret = app.add_subcommand("retrieve", "phase retrieval against modulus data");
  s_ret->add_option("--data", ret.data, "measured amplitudes (GridFile)")->required();
  add_reg_options(s_ret, ret);

  RetrieveOpts dir;
  CLI::App* s_dir = app.add_subcommand("register-direct", "image-to-image registration");
  s_dir->add_option("--target", dir.data, "target image (GridFile)")->required();
  add_reg_options(s_dir, dir);

  ErhioOpts er;
  CLI::App* s_er = app.add_subcommand("erhio", "ER/HIO baseline with shrinkwrap");
  s_er->add_option("--data", er.data, "measured amplitudes (GridFile)")->required();
  s_er->add_option("--out", er.out, "output directory")->required();
  s_er->add_option("--truth", er.truth, "truth image; restarts ranked by reconstruction error");
  s_er->add_option("--schedule", er.schedule, "cycle spec, e.g. ER50HIO100x20");
  s_er->add_option("--threshold", er.threshold, "shrinkwrap support threshold");
  s_er->add_option("--restarts", er.restarts, "random restarts");
  s_er->add_option("--seed", er.seed, "restart RNG seed");
  s_er->add_option("--beta", er.beta, "HIO feedback parameter");
  s_er->add_option("--sw-cadence", er.sw_cadence, "iterations between shrinkwrap refreshes");
  s_er->add_option("--sw-sigma", er.sw_sigma, "initial shrinkwrap blur std (px)");
  s_er->add_option("--sw-decay", er.sw_decay, "per-refresh blur decay");
  s_er->add_option("--sw-floor", er.sw_floor, "blur std floor (px)");
  s_er->add_option("--threads", er.threads, "worker threads (0: hardware)");
  s_er->add_flag("--png,!--no-png", er.png, "write a best-reconstruction PNG");

  CompareOpts cmp;
  CLI::App* s_cmp = app.add_subcommand("compare", "score run directories against a truth image");
  s_cmp->add_option("--runs", cmp.runs, "run directories")->required()->expected(-1);
  s_cmp->add_option("--truth", cmp.truth, "truth image (GridFile)")->required();
  s_cmp->add_option("--out", cmp.out, "report basename (.csv and .txt appended)")->required();

  std::string config_dummy;
  for (CLI::App* sub : {s_sim, s_tpl, s_ret, s_dir, s_er}) {
    sub->add_option("--config", config_dummy, "manifest to take defaults from");
    take_last(sub);
  }
  take_last(s_cmp);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty() && app.get_subcommand_no_throw(args[0]) != nullptr) {
      std::set<std::string> flags{"png"};
      if (args[0] == "simulate") flags.insert({"poisson", "quantize"});
      if (args[0] == "retrieve" || args[0] == "register-direct") flags.insert("half-density");
      args = splice_config(std::move(args), flags);
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 3;
  }

  try {
    if (s_sim->parsed()) return run_simulate(sim);
    if (s_tpl->parsed()) return run_template(tpl);
    if (s_ret->parsed()) return run_retrieve(ret, Mode::Indirect);
    if (s_dir->parsed()) return run_retrieve(dir, Mode::Direct);
    if (s_er->parsed()) return run_erhio(er);
    if (s_cmp->parsed()) return run_compare(cmp);
  } catch (const io_error& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 3;
  } catch (const degenerate_error& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "phaseflow: %s\n", e.what());
    return 1;
  }
  return 0;
}
