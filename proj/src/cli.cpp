#include "dsel/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "dsel/checkpoint.hpp"
#include "dsel/diagnostics.hpp"
#include "dsel/oracle.hpp"

#ifndef DSEL_VERSION
#define DSEL_VERSION "0.0.0-unknown"
#endif

namespace dsel {
namespace fs = std::filesystem;
namespace {

// Failure carrying its exit code; the message becomes the "error: " line.
struct CliFailure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliFailure{code, message}; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(kExitUsage, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(kExitUsage, "cannot write " + p.string());
  out << text;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

fs::path runs_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DSEL_RUNS_DIR"); env && *env) return env;
  return "runs";
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

// Config file plus `--set` overrides, last one wins. Data paths become
// absolute (relative ones resolve against the config's directory), so the
// copy stored in a run directory is self-contained.
TrainConfig load_with_overrides(const fs::path& path, const std::vector<std::string>& sets) {
  if (!fs::exists(path)) fail(kExitUsage, "config file not found: " + path.string());
  TrainConfig cfg = load_config(path);
  for (const auto& s : sets) apply_override(cfg, s);
  cfg.validate();
  const fs::path base = fs::absolute(path).parent_path();
  std::vector<std::string*> used;
  if (cfg.task == TaskKind::kText) used = {&cfg.corpus_a, &cfg.corpus_b};
  if (cfg.task == TaskKind::kCsv)
    used = {&cfg.csv_generic, &cfg.csv_specific, &cfg.csv_heldout_specific, &cfg.csv_heldout_generic};
  for (std::string* p : used)
    if (!p->empty()) *p = fs::weakly_canonical(base / *p).string();
  return cfg;
}

// Files of one run, collected for the manifest.
class RunWriter {
 public:
  RunWriter(fs::path dir, std::string id, const TrainConfig& cfg, std::string command)
      : dir_(std::move(dir)), id_(std::move(id)), command_(std::move(command)) {
    if (fs::exists(dir_ / "manifest.json")) fail(kExitUsage, "run directory already used: " + dir_.string());
    fs::create_directories(dir_ / "checkpoints");
    write_file(dir_ / "config.conf", serialize_config(cfg));
    config_ = serialize_config(cfg);
  }

  const fs::path& dir() const { return dir_; }

  void add_result(const RunResult& r) {
    rows_.insert(rows_.end(), r.metrics.begin(), r.metrics.end());
    for (const auto& e : r.events) events_.push_back(r.arm + " " + e);
  }
  void event(const std::string& e) { events_.push_back(e); }
  void timing(const std::string& arm, double seconds) { timings_[arm] = seconds; }
  void set_parent(const std::string& parent) { parent_ = parent; }
  void checkpoint(const std::string& name, const ParamVector& p) {
    save_checkpoint(dir_ / "checkpoints" / name, p);
  }

  // Writes metrics.csv, events.log and the manifest. Called once.
  void finish() {
    write_file(dir_ / "metrics.csv", format_metrics(rows_));
    std::string log;
    for (const auto& e : events_) log += e + "\n";
    write_file(dir_ / "events.log", log);
    nlohmann::ordered_json m;
    m["run_id"] = id_;
    m["version"] = DSEL_VERSION;
    m["command"] = command_;
    if (!parent_.empty()) m["parent"] = parent_;
    m["config"] = config_;
    m["timings_seconds"] = timings_;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir_))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) files[fs::relative(p, dir_).generic_string()] = sha256_file(p);
    m["files"] = files;
    write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::string id_, command_, config_, parent_;
  std::vector<MetricsRow> rows_;
  std::vector<std::string> events_;
  std::map<std::string, double> timings_;
};

struct RunLocation {
  fs::path dir;
  std::string id;
};

RunLocation new_run(const std::string& out_flag, const std::string& id_flag, const TrainConfig& cfg,
                    const std::string& suffix) {
  RunLocation loc;
  loc.id = id_flag.empty() ? timestamp() + "-s" + std::to_string(cfg.seed) + suffix : id_flag;
  loc.dir = runs_root(out_flag) / loc.id;
  if (id_flag.empty()) {
    const std::string base = loc.id;
    for (int k = 2; fs::exists(loc.dir); ++k) {
      loc.id = base + "-" + std::to_string(k);
      loc.dir = runs_root(out_flag) / loc.id;
    }
  }
  return loc;
}

template <class F>
RunResult timed(RunWriter& w, const std::string& arm, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r = f();
  w.timing(arm, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return r;
}

// Runs `f`; a numeric abort keeps the last good state and exits with kExitNumeric.
template <class F>
void guarded(RunWriter& w, const std::string& arm, F&& f) {
  try {
    f();
  } catch (const TrainingAborted& e) {
    w.checkpoint(arm + "_last_good", e.last_good_theta());
    if (e.alpha()) w.checkpoint(arm + "_alpha_last_good", *e.alpha());
    w.event(arm + " abort step=" + std::to_string(e.step()) + " " + e.what());
    w.finish();
    fail(kExitNumeric, std::string("numeric abort in ") + arm + ": " + e.what() +
                           " (last good state in " + (w.dir() / "checkpoints").string() + ")");
  }
}

// Pretraining arm plus optional fine-tuning, written into `w`.
void record_arm(RunWriter& w, const Task& task, const TrainConfig& cfg, RunResult r) {
  w.checkpoint(r.arm + "_final", r.theta);
  if (r.alpha) w.checkpoint(r.arm + "_alpha", *r.alpha);
  if (!r.trajectory.empty()) save_trajectory(w.dir() / "checkpoints" / (r.arm + "_trajectory"), r.trajectory);
  w.add_result(r);
  if (cfg.finetune_steps > 0) {
    RunResult ft;
    guarded(w, r.arm, [&] {
      ft = timed(w, r.arm + ":finetune", [&] { return finetune(task, cfg, r.theta, r.arm, r.last_step); });
    });
    w.checkpoint(r.arm + "_finetuned", ft.theta);
    w.add_result(ft);
  }
}

// ---------------------------------------------------------------------------
// subcommands

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string out, run_id;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const TrainConfig cfg = load_with_overrides(a.config, a.sets);
  const Task task = build_task(cfg);
  const RunLocation loc = new_run(a.out, a.run_id, cfg, "");
  RunWriter w(loc.dir, loc.id, cfg, "train");
  std::vector<std::pair<std::string, std::function<RunResult()>>> arms;
  if (cfg.method != Method::kNone)
    arms.emplace_back(method_name(cfg.method), [&] { return pretrain_bilevel(task, cfg); });
  for (const auto& b : cfg.baselines) {
    if (b == "uniform") arms.emplace_back(b, [&] { return pretrain_uniform(task, cfg); });
    if (b == "mixing") arms.emplace_back(b, [&] { return mixing(task, cfg); });
    if (b == "cds") arms.emplace_back(b, [&] { return cds_pipeline(task, cfg); });
    if (b == "classifier") arms.emplace_back(b, [&] { return classifier_pipeline(task, cfg); });
  }
  if (arms.empty()) arms.emplace_back("uniform", [&] { return pretrain_uniform(task, cfg); });
  for (auto& [arm, run] : arms) {
    RunResult r;
    guarded(w, arm, [&] { r = timed(w, arm, run); });
    record_arm(w, task, cfg, std::move(r));
  }
  w.finish();
  out << loc.dir.string() << "\n";
  return kExitOk;
}

TrainConfig run_config(const fs::path& run_dir, const std::vector<std::string>& sets) {
  if (!fs::exists(run_dir / "config.conf")) fail(kExitUsage, "not a run directory: " + run_dir.string());
  return load_with_overrides(run_dir / "config.conf", sets);
}

std::string run_id_of(const fs::path& run_dir) {
  return fs::weakly_canonical(run_dir).filename().string();
}

struct DerivedArgs {
  std::string run_dir;
  std::string arm;
  std::string mode = "final";
  std::string config;  // transfer: the large configuration
  std::vector<std::string> sets;
  std::string out, run_id;
};

int cmd_finetune(const DerivedArgs& a, std::ostream& out) {
  const fs::path run(a.run_dir);
  TrainConfig cfg = run_config(run, a.sets);
  const std::string arm = a.arm.empty() ? std::string(cfg.method != Method::kNone ? method_name(cfg.method) : "uniform") : a.arm;
  const Task task = build_task(cfg);
  const ParamVector theta = load_checkpoint(run / "checkpoints" / (arm + "_final"), MainModel(task.main_spec).layout());
  if (cfg.finetune_steps == 0) cfg.finetune_steps = 1000;
  const RunLocation loc = new_run(a.out, a.run_id, cfg, "-finetune-" + arm);
  RunWriter w(loc.dir, loc.id, cfg, "finetune");
  w.set_parent(run_id_of(run));
  RunResult ft;
  guarded(w, arm, [&] { ft = timed(w, arm + ":finetune", [&] { return finetune(task, cfg, theta, arm, cfg.T); }); });
  w.checkpoint(arm + "_finetuned", ft.theta);
  w.add_result(ft);
  w.finish();
  out << loc.dir.string() << "\n";
  return kExitOk;
}

int cmd_curriculum(const DerivedArgs& a, std::ostream& out) {
  const fs::path run(a.run_dir);
  const TrainConfig cfg = run_config(run, a.sets);
  if (cfg.method == Method::kNone || cfg.method == Method::kLtr)
    fail(kExitUsage, "curriculum needs a run whose method learns weighting parameters");
  const Task task = build_task(cfg);
  const WeightTrajectory traj = load_trajectory(run / "checkpoints" / (std::string(method_name(cfg.method)) + "_trajectory"));
  const RunLocation loc = new_run(a.out, a.run_id, cfg, "-curriculum-" + a.mode);
  RunWriter w(loc.dir, loc.id, cfg, "curriculum " + a.mode);
  w.set_parent(run_id_of(run));
  const std::string arm = "curriculum_" + a.mode;
  RunResult r;
  guarded(w, arm, [&] { r = timed(w, arm, [&] { return curriculum_ablation(task, cfg, traj, a.mode); }); });
  record_arm(w, task, cfg, std::move(r));
  w.finish();
  out << loc.dir.string() << "\n";
  return kExitOk;
}

int cmd_transfer(const DerivedArgs& a, std::ostream& out) {
  const fs::path run(a.run_dir);
  const TrainConfig small_cfg = run_config(run, {});
  if (small_cfg.method == Method::kNone || small_cfg.method == Method::kLtr)
    fail(kExitUsage, "transfer needs a run whose method learns weighting parameters");
  const TrainConfig large_cfg = load_with_overrides(a.config, a.sets);
  const Task small = build_task(small_cfg);
  const Task large = build_task(large_cfg);
  const WeightTrajectory traj = load_trajectory(run / "checkpoints" / (std::string(method_name(small_cfg.method)) + "_trajectory"));
  const RunLocation loc = new_run(a.out, a.run_id, large_cfg, "-transfer");
  RunWriter w(loc.dir, loc.id, large_cfg, "transfer");
  w.set_parent(run_id_of(run));
  RunResult r;
  guarded(w, "transfer", [&] {
    r = timed(w, "transfer", [&] {
      return transfer_weights(large, large_cfg, traj, scorer_spec(small, small_cfg.method));
    });
  });
  record_arm(w, large, large_cfg, std::move(r));
  w.finish();
  out << loc.dir.string() << "\n";
  return kExitOk;
}

struct DiagnoseArgs {
  std::string checkpoint, config;
  std::vector<std::string> sets;
  long long trials = 1000;
  long long batch_size = 16;
  std::uint64_t seed = 0;
  std::string report;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  if (a.trials < 100) fail(kExitUsage, "trials must be at least 100 (got " + std::to_string(a.trials) + ")");
  if (a.batch_size < 1) fail(kExitUsage, "batch size must be positive");
  const TrainConfig cfg = load_with_overrides(a.config, a.sets);
  const Task task = build_task(cfg);
  const MainModel model(task.main_spec);
  const ParamVector theta = load_checkpoint(a.checkpoint, model.layout());
  const AlignmentOptions opts{static_cast<std::size_t>(a.trials), static_cast<std::size_t>(a.batch_size), a.seed};
  const AlignmentReport r = sar_gar(model, theta, task.data.generic, task.data.specific, opts);
  std::ostringstream row;
  row << a.checkpoint << ',' << r.trials << ',' << format_real(r.sar) << ',' << format_real(r.sar_half_width)
      << ',' << format_real(r.gar) << ',' << format_real(r.gar_half_width) << ',' << r.skipped << ','
      << a.batch_size << ',' << a.seed;
  const fs::path report = a.report.empty() ? fs::path(a.checkpoint).parent_path() / "diagnostics.csv" : fs::path(a.report);
  const bool fresh = !fs::exists(report);
  if (!report.parent_path().empty()) fs::create_directories(report.parent_path());
  std::ofstream f(report, std::ios::app | std::ios::binary);
  if (!f) fail(kExitUsage, "cannot write " + report.string());
  if (fresh) f << "checkpoint,trials,sar,sar_half_width,gar,gar_half_width,skipped,batch_size,seed\n";
  f << row.str() << "\n";
  out << row.str() << "\n";
  out << "SAR " << format_real(r.sar) << " +/- " << format_real(r.sar_half_width) << ", GAR "
      << format_real(r.gar) << " +/- " << format_real(r.gar_half_width) << " over " << r.trials
      << " trials\n";
  return kExitOk;
}

struct OracleArgs {
  long long instances = 50;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
};

int cmd_oracle_check(const OracleArgs& a, std::ostream& out) {
  if (a.instances < 1) fail(kExitUsage, "instances must be positive");
  double worst_fd = 0.0, worst_soba = 0.0;
  for (long long k = 0; k < a.instances; ++k) {
    const std::uint64_t s = a.seed + static_cast<std::uint64_t>(k);
    const std::size_t n = 2 + s % 4, dim = 1 + s % 4;
    const auto inst = oracle::random_instance(n, dim, s);
    auto rng = stream_rng(s, Stream::kData, 1000);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha(i) = g(rng);
    const Eigen::VectorXd exact = oracle::analytic_hypergrad(inst, alpha);
    const double fd = oracle::relative_error(exact, oracle::finite_diff_hypergrad(inst, alpha, 1e-5));
    const double soba = oracle::relative_error(oracle::soba_direction_exact(inst, alpha), exact);
    worst_fd = std::max(worst_fd, fd);
    worst_soba = std::max(worst_soba, soba);
    out << "instance " << s << " n=" << n << " dim=" << dim << " fd_rel=" << format_real(fd)
        << " soba_rel=" << format_real(soba) << "\n";
  }
  const bool ok = worst_fd <= a.tolerance && worst_soba <= a.tolerance;
  out << (ok ? "PASS" : "FAIL") << " max_fd_rel=" << format_real(worst_fd)
      << " max_soba_rel=" << format_real(worst_soba) << " tolerance=" << format_real(a.tolerance) << "\n";
  if (!ok) fail(kExitCheckFailed, "oracle check exceeded tolerance " + format_real(a.tolerance));
  return kExitOk;
}

int cmd_export(const std::string& run_dir, const std::string& out_flag, std::ostream& out) {
  const fs::path run(run_dir);
  const fs::path metrics = run / "metrics.csv";
  if (!fs::exists(metrics)) fail(kExitUsage, "metrics.csv not found in " + run.string());
  MetricsTable t;
  try {
    t = parse_metrics(read_file(metrics));
  } catch (const MalformedRow& e) {
    fail(kExitNumeric, e.what());
  }
  const fs::path dest = out_flag.empty() ? run / "export" : fs::path(out_flag);
  const auto& cols = metrics_columns();
  for (std::size_t c = 2; c < cols.size(); ++c) {
    std::string s = "step,phase,value\n";
    for (const auto& f : t.raw) s += f[0] + "," + f[1] + "," + f[c] + "\n";
    write_file(dest / "series" / (cols[c] + ".csv"), s);
  }
  // Last pretraining and fine-tuning held-out specific loss per arm.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::string>> last;
  for (const auto& f : t.raw) {
    const std::string arm = arm_of(f[1]);
    if (!last.count(arm)) order.push_back(arm);
    auto& slot = last[arm];
    (f[1].ends_with(":finetune") ? slot.second : slot.first) = f[2];
  }
  std::string s = "arm,pretrain_heldout_specific_loss,finetune_heldout_specific_loss\n";
  for (const auto& arm : order) s += arm + "," + last[arm].first + "," + last[arm].second + "\n";
  write_file(dest / "summary.csv", s);
  out << dest.string() << "\n";
  return kExitOk;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void save_trajectory(const fs::path& dir, const WeightTrajectory& trajectory) {
  fs::create_directories(dir);
  for (const auto& s : trajectory.snapshots()) {
    std::ostringstream name;
    name << "t" << std::setw(10) << std::setfill('0') << s.t;
    save_checkpoint(dir / name.str(), s.alpha);
  }
}

WeightTrajectory load_trajectory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("trajectory directory not found: " + dir.string());
  std::vector<std::pair<std::uint64_t, fs::path>> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".manifest") continue;
    const std::string stem = e.path().stem().string();
    if (stem.size() < 2 || stem[0] != 't') continue;
    stems.emplace_back(std::stoull(stem.substr(1)), e.path().parent_path() / stem);
  }
  std::sort(stems.begin(), stems.end());
  WeightTrajectory t;
  for (const auto& [step, stem] : stems) t.push(step, load_checkpoint(stem));
  if (t.empty()) throw ConfigError("trajectory directory is empty: " + dir.string());
  return t;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online bilevel data selection experiments", "dsel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DSEL_VERSION);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Pretrain the configured method and baselines");
  t->add_option("config", train.config, "Config file")->required();
  t->add_option("--set", train.sets, "Override key=value (repeatable, last wins)");
  t->add_option("--out", train.out, "Runs root (default $DSEL_RUNS_DIR or ./runs)");
  t->add_option("--run-id", train.run_id, "Run directory name");

  DerivedArgs ft;
  auto* f = app.add_subcommand("finetune", "Fine-tune a trained arm on the specific set");
  f->add_option("run_dir", ft.run_dir, "Run directory")->required();
  f->add_option("--arm", ft.arm, "Arm to fine-tune (default: the run's method)");
  f->add_option("--set", ft.sets, "Override key=value");
  f->add_option("--out", ft.out, "Runs root");
  f->add_option("--run-id", ft.run_id, "Run directory name");

  DiagnoseArgs dg;
  auto* d = app.add_subcommand("diagnose", "SAR/GAR alignment rates of a checkpoint");
  d->add_option("checkpoint", dg.checkpoint, "Checkpoint stem")->required();
  d->add_option("--config", dg.config, "Config describing data and architecture")->required();
  d->add_option("--trials", dg.trials, "Monte-Carlo trials (>= 100)");
  d->add_option("--batch-size", dg.batch_size, "Batch size per trial");
  d->add_option("--seed", dg.seed, "Diagnostic seed");
  d->add_option("--set", dg.sets, "Override key=value");
  d->add_option("--report", dg.report, "CSV file the report row is appended to");

  OracleArgs oa;
  auto* o = app.add_subcommand("oracle-check", "Hypergradient checks on random quadratic instances");
  o->add_option("--instances", oa.instances, "Number of instances");
  o->add_option("--seed", oa.seed, "First instance seed");
  o->add_option("--tolerance", oa.tolerance, "Relative error bound");

  std::string export_dir, export_out;
  auto* e = app.add_subcommand("export", "Per-metric series and arm summary");
  e->add_option("run_dir", export_dir, "Run directory")->required();
  e->add_option("--out", export_out, "Output directory (default <run_dir>/export)");

  DerivedArgs cu;
  auto* c = app.add_subcommand("curriculum", "Retrain with frozen weights from a trajectory");
  c->add_option("run_dir", cu.run_dir, "Run directory with a weight trajectory")->required();
  c->add_option("--mode", cu.mode, "final | shuffled")->check(CLI::IsMember({"final", "shuffled"}));
  c->add_option("--set", cu.sets, "Override key=value");
  c->add_option("--out", cu.out, "Runs root");
  c->add_option("--run-id", cu.run_id, "Run directory name");

  DerivedArgs tr;
  auto* x = app.add_subcommand("transfer", "Train a larger model with frozen weights from a smaller run");
  x->add_option("run_dir", tr.run_dir, "Run directory of the small model")->required();
  x->add_option("config", tr.config, "Config of the large model")->required();
  x->add_option("--set", tr.sets, "Override key=value for the large config");
  x->add_option("--out", tr.out, "Runs root");
  x->add_option("--run-id", tr.run_id, "Run directory name");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << DSEL_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << one_line(ex.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*t) return cmd_train(train, out);
    if (*f) return cmd_finetune(ft, out);
    if (*d) return cmd_diagnose(dg, out);
    if (*o) return cmd_oracle_check(oa, out);
    if (*e) return cmd_export(export_dir, export_out, out);
    if (*c) return cmd_curriculum(cu, out);
    if (*x) return cmd_transfer(tr, out);
  } catch (const CliFailure& ex) {
    err << "error: " << one_line(ex.message) << "\n";
    return ex.code;
  } catch (const TrainingAborted& ex) {
    err << "error: numeric abort: " << one_line(ex.what()) << "\n";
    return kExitNumeric;
  } catch (const ConfigError& ex) {
    err << "error: " << one_line(ex.what()) << "\n";
    return kExitUsage;
  } catch (const ContractError& ex) {
    err << "error: " << one_line(ex.what()) << "\n";
    return kExitUsage;
  } catch (const NumericError& ex) {
    err << "error: numeric failure: " << one_line(ex.what()) << "\n";
    return kExitNumeric;
  } catch (const std::exception& ex) {
    err << "error: " << one_line(ex.what()) << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dsel
