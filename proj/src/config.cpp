#include "dsel/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dsel/errors.hpp"

namespace dsel {
namespace {

// Thrown by value parsers; the caller attaches line/column.
struct BadValue {
  std::string what;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw BadValue{"expected a real number"};
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw BadValue{"expected a nonnegative integer"};
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (item.empty()) throw BadValue{"empty list item"};
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

TaskKind parse_task(std::string_view s) {
  if (s == "quadratic") return TaskKind::kQuadratic;
  if (s == "text") return TaskKind::kText;
  if (s == "csv") return TaskKind::kCsv;
  throw BadValue{"unknown task '" + std::string(s) + "'"};
}

FeatureLoss parse_feature_loss(std::string_view s) {
  if (s == "mse") return FeatureLoss::kMeanSquaredError;
  if (s == "cross_entropy") return FeatureLoss::kCrossEntropy;
  throw BadValue{"unknown feature_loss '" + std::string(s) + "'"};
}

// Enum parsers from other modules throw ConfigError; fold them into BadValue.
template <class F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw BadValue{e.what()};
  }
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define DSEL_SIZE(name)                                                                    \
  Field{#name, [](TrainConfig& c, std::string_view v) { c.name = to_u64(v); },             \
        [](const TrainConfig& c) { return std::to_string(c.name); }}
#define DSEL_U64(name) DSEL_SIZE(name)
#define DSEL_REAL(name)                                                                    \
  Field{#name, [](TrainConfig& c, std::string_view v) { c.name = to_double(v); },          \
        [](const TrainConfig& c) { return fmt(c.name); }}
#define DSEL_STR(name)                                                                     \
  Field{#name, [](TrainConfig& c, std::string_view v) { c.name = std::string(v); },        \
        [](const TrainConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"task", [](TrainConfig& c, std::string_view v) { c.task = parse_task(v); },
            [](const TrainConfig& c) { return std::string(task_name(c.task)); }},
      DSEL_U64(seed),
      DSEL_U64(data_seed),
      Field{"method",
            [](TrainConfig& c, std::string_view v) { c.method = wrap([&] { return parse_method(v); }); },
            [](const TrainConfig& c) { return std::string(method_name(c.method)); }},
      Field{"baselines",
            [](TrainConfig& c, std::string_view v) {
              c.baselines.clear();
              for (auto item : split_list(v)) {
                if (item != "uniform" && item != "mixing" && item != "cds" && item != "classifier")
                  throw BadValue{"unknown baseline '" + std::string(item) + "'"};
                c.baselines.emplace_back(item);
              }
            },
            [](const TrainConfig& c) { return join(c.baselines); }},
      Field{"filter_rule",
            [](TrainConfig& c, std::string_view v) {
              c.filter_rule = wrap([&] { return parse_filter_rule(v); });
            },
            [](const TrainConfig& c) { return std::string(filter_rule_name(c.filter_rule)); }},
      DSEL_SIZE(b_small),
      DSEL_SIZE(b_large),
      DSEL_SIZE(T),
      DSEL_REAL(lr),
      DSEL_REAL(momentum),
      Field{"rho",
            [](TrainConfig& c, std::string_view v) {
              if (v.empty()) c.rho.reset();
              else c.rho = to_double(v);
            },
            [](const TrainConfig& c) { return c.rho ? fmt(*c.rho) : std::string(); }},
      DSEL_REAL(eta_alpha),
      DSEL_REAL(eta_v),
      DSEL_REAL(v_clip),
      DSEL_REAL(score_clamp),
      DSEL_REAL(lambda),
      DSEL_REAL(keep_fraction),
      DSEL_SIZE(cds_pretrain_steps),
      DSEL_SIZE(classifier_steps),
      DSEL_REAL(classifier_lr),
      DSEL_REAL(classifier_min_accuracy),
      DSEL_SIZE(finetune_steps),
      DSEL_REAL(finetune_lr),
      DSEL_SIZE(finetune_eval_every),
      DSEL_SIZE(patience),
      DSEL_SIZE(eval_every),
      DSEL_SIZE(snapshot_every),
      DSEL_SIZE(diag_every),
      DSEL_SIZE(diag_trials),
      Field{"curriculum_mode",
            [](TrainConfig& c, std::string_view v) {
              if (v != "final" && v != "shuffled")
                throw BadValue{"curriculum_mode must be final or shuffled"};
              c.curriculum_mode = std::string(v);
            },
            [](const TrainConfig& c) { return c.curriculum_mode; }},
      DSEL_SIZE(input_dim),
      DSEL_SIZE(n_distractors),
      DSEL_REAL(target_fraction),
      DSEL_REAL(noise),
      DSEL_REAL(mean_scale),
      DSEL_SIZE(n_generic),
      DSEL_SIZE(n_specific),
      DSEL_SIZE(n_heldout),
      DSEL_STR(corpus_a),
      DSEL_STR(corpus_b),
      DSEL_REAL(text_mix),
      DSEL_SIZE(window),
      DSEL_STR(csv_generic),
      DSEL_STR(csv_specific),
      DSEL_STR(csv_heldout_specific),
      DSEL_STR(csv_heldout_generic),
      Field{"hidden",
            [](TrainConfig& c, std::string_view v) {
              c.hidden.clear();
              for (auto item : split_list(v)) c.hidden.push_back(to_u64(item));
            },
            [](const TrainConfig& c) { return join(c.hidden); }},
      DSEL_SIZE(embed_dim),
      DSEL_SIZE(weight_hidden),
      DSEL_SIZE(weight_embed),
      Field{"feature_loss",
            [](TrainConfig& c, std::string_view v) { c.feature_loss = parse_feature_loss(v); },
            [](const TrainConfig& c) {
              return std::string(c.feature_loss == FeatureLoss::kMeanSquaredError ? "mse"
                                                                                  : "cross_entropy");
            }},
  };
  return table;
}

#undef DSEL_SIZE
#undef DSEL_U64
#undef DSEL_REAL
#undef DSEL_STR

const Field* find_field(std::string_view key) {
  for (const Field& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

// Applies `key = value` found on `line`; columns are 1-based offsets into it.
void apply_line(TrainConfig& cfg, std::string_view line, int line_no) {
  const auto eq = line.find('=');
  const auto first = line.find_first_not_of(" \t");
  if (eq == std::string_view::npos)
    throw ConfigError("expected key = value", line_no, static_cast<int>(first) + 1);
  const auto key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError("missing key", line_no, static_cast<int>(first) + 1);
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown key '" + std::string(key) + "'", line_no, static_cast<int>(first) + 1);
  const auto raw = line.substr(eq + 1);
  const auto value = trim(raw);
  const auto vstart = raw.find_first_not_of(" \t");
  const int col = static_cast<int>(eq + 2 + (vstart == std::string_view::npos ? 0 : vstart));
  try {
    f->set(cfg, value);
  } catch (const BadValue& e) {
    throw ConfigError(std::string(key) + ": " + e.what, line_no, col);
  }
}

}  // namespace

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kQuadratic: return "quadratic";
    case TaskKind::kText: return "text";
    case TaskKind::kCsv: return "csv";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (b_small == 0) throw ConfigError("b_small must be positive");
  if (b_small > b_large) throw ConfigError("b_small must not exceed b_large");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must lie in (0, 1]");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (rho && !(*rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(v_clip > 0.0)) throw ConfigError("v_clip must be positive");
  if (!(score_clamp > 0.0)) throw ConfigError("score_clamp must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (snapshot_every == 0) throw ConfigError("snapshot_every must be positive");
  if (finetune_eval_every == 0) throw ConfigError("finetune_eval_every must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (diag_every > 0 && diag_trials < 100) throw ConfigError("diag_trials must be at least 100");
  if (!(classifier_min_accuracy >= 0.0 && classifier_min_accuracy <= 1.0))
    throw ConfigError("classifier_min_accuracy must lie in [0, 1]");
  switch (task) {
    case TaskKind::kQuadratic:
      if (input_dim == 0) throw ConfigError("input_dim must be positive");
      if (!(target_fraction > 0.0 && target_fraction < 1.0))
        throw ConfigError("target_fraction must lie in (0, 1)");
      if (n_distractors == 0) throw ConfigError("n_distractors must be positive");
      if (n_generic < b_large) throw ConfigError("n_generic must be at least b_large");
      if (n_specific < b_small) throw ConfigError("n_specific must be at least b_small");
      if (n_heldout == 0) throw ConfigError("n_heldout must be positive");
      break;
    case TaskKind::kText:
      if (!(text_mix >= 0.0 && text_mix <= 1.0)) throw ConfigError("text_mix must lie in [0, 1]");
      if (window == 0) throw ConfigError("window must be positive");
      if (n_generic < b_large) throw ConfigError("n_generic must be at least b_large");
      if (n_specific < b_small) throw ConfigError("n_specific must be at least b_small");
      if (n_heldout == 0) throw ConfigError("n_heldout must be positive");
      break;
    case TaskKind::kCsv:
      if (csv_generic.empty() || csv_specific.empty())
        throw ConfigError("csv task needs csv_generic and csv_specific");
      break;
  }
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    apply_line(cfg, line, line_no);
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(TrainConfig& cfg, std::string_view assignment) {
  try {
    apply_line(cfg, assignment, 1);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("override '") + std::string(assignment) + "': " + e.what());
  }
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  for (const Field& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

}  // namespace dsel
