#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace nladstv::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_path(const fs::path& p, const char* key) {
  require(!p.empty(), ErrorKind::configuration, std::string("missing setting '") + key + "'");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::optional<json> read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "malformed metadata " + path.string() + ": " + e.what());
  }
}

void save_output(const Image& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_image(img, path);
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["sigma"] = c.sigma;
  j["bsnr"] = c.bsnr;
  j["blur"] = {{"kind", c.blur.kind},     {"size", c.blur.size},
               {"sigma", c.blur.sigma},   {"length", c.blur.length},
               {"angle", c.blur.angle}};
  j["method"] = to_string(c.method);
  j["tau"] = c.tau;
  j["alpha_plus"] = c.alpha_plus;
  j["patch"] = {{"patch_size", c.patch.patch_size}, {"window_size", c.patch.window_size},
                {"neighbors", c.patch.neighbors},   {"rho", c.patch.rho},
                {"beta", c.patch.beta}};
  j["solver"] = {{"mu", c.solver.mu},         {"mu_factor", c.solver.mu_factor},
                 {"max_iter", c.solver.max_iter}, {"tol", c.solver.tol},
                 {"cg_tol", c.solver.cg_tol}, {"cg_max", c.solver.cg_max},
                 {"gamma", c.solver.gamma}};
  j["wiener_nsr"] = c.wiener_nsr;
  j["seed"] = c.seed;
  return j;
}

json stamp(const std::string& command) {
  return {{"command", command}, {"version", kVersion}};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Fills the degradation keys missing from `s` with those recorded next to
/// the input by `degrade`, so a restore sees the noise level it was given.
void inherit_degradation(Settings& s) {
  const auto input = s.find("input");
  if (input == s.end()) return;
  const auto meta = read_json(with_suffix(input->second, ".json"));
  if (!meta || !meta->contains("config")) return;
  const json& c = (*meta)["config"];
  auto fill = [&](const char* key, const json& value) {
    if (s.count(key) || value.is_null()) return;
    if (value.is_string()) {
      s[key] = value.get<std::string>();
    } else {
      std::ostringstream text;
      text << std::setprecision(17) << value.get<double>();
      s[key] = text.str();
    }
  };
  fill("task", c.value("task", json()));
  fill("sigma", c.value("sigma", json()));
  fill("bsnr", c.value("bsnr", json()));
  if (c.contains("blur")) {
    const json& b = c["blur"];
    fill("blur", b.value("kind", json()));
    fill("blur_size", b.value("size", json()));
    fill("blur_sigma", b.value("sigma", json()));
    fill("motion_length", b.value("length", json()));
    fill("motion_angle", b.value("angle", json()));
  }
}

// ---------------------------------------------------------------- commands

int cmd_degrade(const ExperimentConfig& c, std::ostream& out) {
  require_path(c.input, "input");
  require_path(c.output, "output");
  const Image clean = load_image(c.input);
  const Degraded d = degrade(clean, c, c.seed);
  save_output(d.g, c.output);
  json meta = stamp("degrade");
  meta["input"] = c.input.string();
  meta["output"] = c.output.string();
  meta["degradation"] = c.degradation();
  meta["noise_sigma"] = d.sigma;
  meta["config"] = config_json(c);
  write_json(with_suffix(c.output, ".json"), meta);
  out << "degraded " << c.input.string() << " -> " << c.output.string() << " (noise sigma "
      << d.sigma << ")\n";
  return exit_ok;
}

int cmd_estimate(const ExperimentConfig& c, std::ostream& out) {
  require_path(c.input, "input");
  require_path(c.directions, "directions");
  const Image g = load_image(c.input);
  DpeConfig dc;
  dc.wiener_nsr = c.wiener_nsr;
  const auto start = std::chrono::steady_clock::now();
  const DirectionField d = estimate_parameters(g, c.alpha_plus, c.model(), dc);
  const double seconds = elapsed(start);
  save_direction_field(d, c.directions);
  json meta = stamp("estimate");
  meta["input"] = c.input.string();
  meta["seconds"] = seconds;
  meta["config"] = config_json(c);
  write_json(c.directions / "estimate.json", meta);
  out << "direction field written to " << c.directions.string() << "\n";
  return exit_ok;
}

int cmd_restore(const ExperimentConfig& c, std::ostream& out) {
  require_path(c.input, "input");
  require_path(c.output, "output");
  const Image g = load_image(c.input);
  std::optional<DirectionField> dirs;
  if (is_directional(c.method)) {
    require(!c.directions.empty(), ErrorKind::configuration,
            "method " + to_string(c.method) + " needs a direction field (set 'directions')");
    dirs = load_direction_field(c.directions);
  }
  std::optional<Image> reference;
  if (!c.reference.empty()) reference = load_image(c.reference);

  const auto start = std::chrono::steady_clock::now();
  const RegularizerMode mode =
      make_mode(c.method, g, c, nominal_sigma(c), dirs ? &*dirs : nullptr);
  RestoreOptions opts;
  if (reference) opts.reference = &*reference;
  const RestoreResult r = admm_restore(g, c.model(), mode, c.solver, opts);
  const double seconds = elapsed(start);

  save_output(r.image, c.output);
  const fs::path log = c.log.empty() ? with_suffix(c.output, ".log.csv") : c.log;
  {
    std::ofstream csv(log);
    if (!csv) fail(ErrorKind::io, "cannot write " + log.string());
    write_history_csv(csv, r.history);
  }
  json meta = stamp("restore");
  meta["input"] = c.input.string();
  meta["output"] = c.output.string();
  meta["log"] = log.string();
  meta["degradation"] = c.degradation();
  meta["method"] = to_string(c.method);
  meta["tau"] = c.tau;
  meta["iterations"] = r.iterations;
  meta["converged"] = r.converged;
  meta["seconds"] = seconds;
  if (reference) meta["psnr"] = psnr(*reference, r.image);
  if (dirs) meta["directions"] = c.directions.string();
  meta["config"] = config_json(c);
  write_json(with_suffix(c.output, ".json"), meta);
  out << "restored " << c.input.string() << " with " << to_string(c.method) << " in "
      << r.iterations << " iterations";
  if (reference) out << ", PSNR " << std::fixed << std::setprecision(2) << meta["psnr"].get<double>();
  out << "\n";
  return exit_ok;
}

int cmd_evaluate(const ExperimentConfig& c, const std::vector<std::string>& pairs,
                 std::ostream& out) {
  require(!pairs.empty() && pairs.size() % 2 == 0, ErrorKind::configuration,
          "evaluate needs one or more '--pair REFERENCE RESTORED'");
  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < pairs.size(); k += 2) {
    const fs::path ref = pairs[k], restored = pairs[k + 1];
    ReportRow row;
    row.image = ref.stem().string();
    row.method = restored.stem().string();
    row.psnr = psnr(load_image(ref), load_image(restored));
    if (const auto meta = read_json(with_suffix(restored, ".json"))) {
      row.method = meta->value("method", row.method);
      row.degradation = meta->value("degradation", "");
      row.tau = meta->value("tau", 0.0);
      row.seconds = meta->value("seconds", 0.0);
      row.iterations = meta->value("iterations", 0);
    }
    rows.push_back(row);
  }
  rows = finish_table(std::move(rows));
  if (c.output.empty()) {
    write_table(out, rows);
  } else {
    if (c.output.has_parent_path()) fs::create_directories(c.output.parent_path());
    std::ofstream csv(c.output);
    if (!csv) fail(ErrorKind::io, "cannot write " + c.output.string());
    write_table(csv, rows);
    out << "wrote " << rows.size() << " rows to " << c.output.string() << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------- bench

struct Cell {
  std::string image;
  fs::path path;
  ExperimentConfig cfg;  ///< degradation and method set
  std::string key() const {
    return image + "|" + to_string(cfg.method) + "|" + cfg.degradation();
  }
};

const char* kCellsHeader =
    "image,method,degradation,tau,psnr,seconds,iterations,seed,tau_lo,tau_hi,degraded_psnr";
const char* kRunsHeader = "image,method,degradation,tau,psnr,seconds,iterations,converged";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::map<std::string, ReportRow> read_cells(const fs::path& path) {
  std::map<std::string, ReportRow> done;
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return done;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 11) continue;  // a torn last line from an interrupted run
    ReportRow r{f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                std::stod(f[6]), false};
    done[r.image + "|" + r.method + "|" + r.degradation] = r;
  }
  return done;
}

int cmd_bench(const ExperimentConfig& c, std::ostream& out) {
  require_path(c.corpus, "corpus");
  require_path(c.out, "out");
  require(fs::is_directory(c.corpus), ErrorKind::io, "corpus " + c.corpus.string() + " is not a directory");
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(c.corpus))
    if (e.is_regular_file() && e.path().extension() == ".png") images.push_back(e.path());
  std::sort(images.begin(), images.end());
  require(!images.empty(), ErrorKind::io, "no PNG images in " + c.corpus.string());

  std::vector<Cell> cells;
  for (const auto& path : images) {
    const auto levels = c.task == Task::denoise ? c.sigmas : c.bsnrs;
    for (double level : levels)
      for (Method m : c.methods) {
        Cell cell{path.stem().string(), path, c};
        (c.task == Task::denoise ? cell.cfg.sigma : cell.cfg.bsnr) = level;
        cell.cfg.method = m;
        cells.push_back(cell);
      }
  }

  fs::create_directories(c.out);
  const fs::path cells_path = c.out / "cells.csv", runs_path = c.out / "runs.csv";
  const auto done = read_cells(cells_path);
  for (const auto& [path, header] : {std::pair{cells_path, kCellsHeader}, std::pair{runs_path, kRunsHeader}}) {
    if (!fs::exists(path) || fs::file_size(path) == 0) {
      std::ofstream(path) << header << "\n";
      continue;
    }
    // terminate a line torn by an interrupted run so appends start clean
    std::ifstream in(path, std::ios::binary);
    in.seekg(-1, std::ios::end);
    if (in.get() != '\n') std::ofstream(path, std::ios::app) << "\n";
  }

  std::vector<const Cell*> todo;
  for (const auto& cell : cells)
    if (!done.count(cell.key())) todo.push_back(&cell);
  out << cells.size() << " cells, " << cells.size() - todo.size() << " already done\n";

  std::mutex lock;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next++;
      if (k >= todo.size()) return;
      {
        std::lock_guard<std::mutex> guard(lock);
        if (error) return;
      }
      try {
        const Cell& cell = *todo[k];
        const ExperimentConfig& cc = cell.cfg;
        const std::uint64_t seed =
            cc.seed * 0x9E3779B97F4A7C15ull ^ fnv1a(cell.image + "|" + cc.degradation());
        const Image clean = load_image(cell.path);
        const Degraded d = degrade(clean, cc, seed);
        const double degraded_psnr = psnr(clean, d.g);
        std::optional<DirectionField> dirs;
        if (is_directional(cc.method)) {
          DpeConfig dc;
          dc.wiener_nsr = cc.wiener_nsr;
          dirs = estimate_parameters(d.g, cc.alpha_plus, cc.model(), dc);
        }
        const RegularizerMode mode = make_mode(cc.method, d.g, cc, d.sigma, dirs ? &*dirs : nullptr);
        const auto [lo, hi] = cc.tau_bounds(cc.method, d.sigma);
        std::ostringstream runs;
        runs << std::setprecision(10);
        ReportRow best{cell.image, to_string(cc.method), cc.degradation(), 0, -1, 0, 0, false};
        search_tau(lo, hi, cc.tau_points, cc.tau_refine, [&](double tau) {
          SolverConfig sc = cc.solver;
          sc.tau = tau;
          const auto start = std::chrono::steady_clock::now();
          const RestoreResult r = admm_restore(d.g, cc.model(), mode, sc);
          const double seconds = elapsed(start);
          const double q = psnr(clean, r.image);
          runs << cell.image << ',' << best.method << ',' << best.degradation << ',' << tau << ','
               << q << ',' << seconds << ',' << r.iterations << ',' << r.converged << '\n';
          if (q > best.psnr)
            best = {best.image, best.method, best.degradation, tau, q, seconds,
                    double(r.iterations), false};
          return q;
        });
        std::lock_guard<std::mutex> guard(lock);
        std::ofstream(runs_path, std::ios::app) << runs.str();
        std::ofstream cells_out(cells_path, std::ios::app);
        cells_out << std::setprecision(10) << best.image << ',' << best.method << ','
                  << best.degradation << ',' << best.tau << ',' << best.psnr << ','
                  << best.seconds << ',' << best.iterations << ',' << seed << ',' << lo << ','
                  << hi << ',' << degraded_psnr << '\n';
        cells_out.flush();
        out << "  " << best.image << " " << best.method << " " << best.degradation
            << ": best tau " << best.tau << ", PSNR " << best.psnr << "\n";
        out.flush();
      } catch (...) {
        std::lock_guard<std::mutex> guard(lock);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(c.workers, int(std::max<std::size_t>(todo.size(), 1)));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  const auto all = read_cells(cells_path);
  std::vector<ReportRow> rows;
  for (const auto& cell : cells) rows.push_back(all.at(cell.key()));
  rows = finish_table(std::move(rows));
  {
    std::ofstream table(c.out / "table.csv");
    if (!table) fail(ErrorKind::io, "cannot write " + (c.out / "table.csv").string());
    write_table(table, rows);
  }
  json meta = stamp("bench");
  meta["corpus"] = c.corpus.string();
  meta["images"] = json::array();
  for (const auto& p : images) meta["images"].push_back(p.filename().string());
  meta["tau_points"] = c.tau_points;
  meta["tau_refine"] = c.tau_refine;
  meta["tau_grids"] = json::array();
  for (const auto& cell : cells) {
    const double level = c.task == Task::denoise
                             ? cell.cfg.sigma
                             : std::sqrt(sample_variance(apply_forward(
                                   cell.cfg.model(), luminance(load_image(cell.path))))) *
                                   std::pow(10.0, -cell.cfg.bsnr / 20);
    const auto [lo, hi] = cell.cfg.tau_bounds(cell.cfg.method, level);
    meta["tau_grids"].push_back({{"image", cell.image},
                                 {"method", to_string(cell.cfg.method)},
                                 {"degradation", cell.cfg.degradation()},
                                 {"tau_lo", lo},
                                 {"tau_hi", hi}});
  }
  meta["config"] = config_json(c);
  write_json(c.out / "bench.json", meta);
  out << "table written to " << (c.out / "table.csv").string() << "\n";
  return exit_ok;
}

}  // namespace

Degraded degrade(const Image& clean, const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.task == Task::denoise) return {add_gaussian_noise(clean, cfg.sigma, {seed}), cfg.sigma};
  const Image blurred = apply_forward(cfg.model(), clean);
  const double sigma = bsnr_sigma(blurred, cfg.bsnr);
  return {add_gaussian_noise(blurred, sigma, {seed}), sigma};
}

double nominal_sigma(const ExperimentConfig& cfg) {
  return cfg.task == Task::denoise ? cfg.sigma : 0.0;
}

RegularizerMode make_mode(Method method, const Image& g, const ExperimentConfig& cfg,
                          double noise_sigma, const DirectionField* dirs) {
  if (is_directional(method))
    require(dirs != nullptr, ErrorKind::configuration,
            "method " + to_string(method) + " needs a direction field");
  WeightGraph graph = is_nonlocal(method)
                          ? restoration_graph(g, cfg.model(), noise_sigma, cfg.patch, cfg.wiener_nsr)
                          : gaussian_weight_graph(g.width(), g.height(), 3, 0.5);
  if (is_directional(method)) return RegularizerMode::nladstv(std::move(graph), *dirs);
  return RegularizerMode::nlstv(std::move(graph));
}

std::vector<ReportRow> finish_table(std::vector<ReportRow> rows) {
  auto order = [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.image, a.method, a.degradation) < std::tie(b.image, b.method, b.degradation);
  };
  std::sort(rows.begin(), rows.end(), order);
  std::map<std::pair<std::string, std::string>, double> top;
  for (const auto& r : rows) {
    auto& t = top.try_emplace({r.image, r.degradation}, r.psnr).first->second;
    t = std::max(t, r.psnr);
  }
  for (auto& r : rows) r.best = r.psnr == top.at({r.image, r.degradation});

  std::map<std::pair<std::string, std::string>, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.degradation}].push_back(&r);
  std::vector<ReportRow> averages;
  for (const auto& [key, members] : groups) {
    ReportRow avg{"Avg.", key.first, key.second, 0, 0, 0, 0, false};
    for (const ReportRow* m : members) {
      avg.psnr += m->psnr / members.size();
      avg.seconds += m->seconds / members.size();
      avg.iterations += m->iterations / members.size();
    }
    averages.push_back(avg);
  }
  std::map<std::string, double> top_avg;
  for (const auto& a : averages) {
    auto& t = top_avg.try_emplace(a.degradation, a.psnr).first->second;
    t = std::max(t, a.psnr);
  }
  for (auto& a : averages) a.best = a.psnr == top_avg.at(a.degradation);
  rows.insert(rows.end(), averages.begin(), averages.end());
  return rows;
}

void write_table(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "image,method,degradation,tau,psnr,seconds,iterations,best\n";
  for (const auto& r : rows) {
    out << r.image << ',' << r.method << ',' << r.degradation << ',';
    if (r.image != "Avg.") out << std::setprecision(6) << r.tau;
    out << ',' << std::fixed << std::setprecision(4) << r.psnr << ',' << std::setprecision(3)
        << r.seconds << ',' << std::setprecision(1) << r.iterations << ',' << (r.best ? 1 : 0)
        << '\n'
        << std::defaultfloat;
  }
}

int exit_code(const std::exception& e) {
  const auto* error = dynamic_cast<const Error*>(&e);
  if (!error) return exit_unexpected;
  switch (error->kind()) {
    case ErrorKind::diverged:
      return exit_divergence;
    case ErrorKind::io:
    case ErrorKind::unsupported_format:
      return exit_io;
    default:
      return exit_configuration;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Direction-adaptive nonlocal structure tensor TV restoration", "nladstv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Sub> subs;
  const std::pair<const char*, const char*> names[] = {
      {"degrade", "synthesize a degraded observation"},
      {"estimate", "estimate the direction field of an observation"},
      {"restore", "restore an observation"},
      {"evaluate", "tabulate PSNR of restored images"},
      {"bench", "grid-search tau over a corpus and tabulate"}};
  std::vector<std::string> pairs;
  for (const auto& [name, help] : names) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--config", s.config, "flat key = value settings file");
    for (const auto& key : config_keys())
      s.app->add_option("--" + key.name, s.flags[key.name], key.help);
  }
  subs["evaluate"]
      .app->add_option("--pair", pairs, "REFERENCE RESTORED (repeatable)")
      ->expected(2)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_configuration;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      Settings settings;
      if (!s.config.empty()) settings = read_settings(s.config);
      for (const auto& key : config_keys())
        if (s.app->count("--" + key.name) > 0) settings[key.name] = s.flags[key.name];
      if (name == "restore" || name == "estimate") inherit_degradation(settings);
      const ExperimentConfig cfg = make_config(settings);
      if (name == "degrade") return cmd_degrade(cfg, out);
      if (name == "estimate") return cmd_estimate(cfg, out);
      if (name == "restore") return cmd_restore(cfg, out);
      if (name == "evaluate") return cmd_evaluate(cfg, pairs, out);
      if (name == "bench") return cmd_bench(cfg, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return exit_unexpected;
}

}  // namespace nladstv::cli
