#include "bralt/config.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"
#include "bralt/runlog_io.hpp"

#include <toml++/toml.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace bralt {

namespace {

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<DataSource> kSources[] = {{DataSource::gaussian_mixture, "gaussian_mixture"},
                                             {DataSource::csv, "csv"}};
constexpr EnumName<ImbalanceKind> kImbalances[] = {{ImbalanceKind::none, "none"},
                                                   {ImbalanceKind::linear_ratio, "linear"},
                                                   {ImbalanceKind::exponential_longtail, "longtail"}};
constexpr EnumName<InitKind> kInits[] = {
    {InitKind::random, "random"}, {InitKind::twisted_main, "twisted_main"}, {InitKind::twisted_rare, "twisted_rare"}};
constexpr EnumName<LossMode> kLosses[] = {{LossMode::plain_ce, "ce"}, {LossMode::superloss, "superloss"}};
constexpr EnumName<SelectionOrder> kOrders[] = {{SelectionOrder::global, "global"},
                                                {SelectionOrder::per_cluster_round_robin, "round_robin"}};

template <typename E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <typename E, std::size_t N>
std::string choices(const EnumName<E> (&table)[N]) {
  std::string s;
  for (const auto& e : table) s += (s.empty() ? "" : ", ") + std::string(e.name);
  return s;
}

// Reads keys of one table, remembers which were consumed, reports the rest.
class Section {
 public:
  Section(const toml::table* table, std::string prefix, std::vector<std::string>& errors)
      : table_(table), prefix_(std::move(prefix)), errors_(errors) {}

  Section sub(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* n = node(key);
    if (n != nullptr && !n->is_table()) {
      error(key, "must be a table");
      n = nullptr;
    }
    return Section(n ? n->as_table() : nullptr, path(key), errors_);
  }

  void read(std::string_view key, std::int64_t& out, std::int64_t lo = std::numeric_limits<std::int64_t>::min()) {
    const toml::node* n = take(key);
    if (!n) return;
    if (!n->is_integer()) return error(key, "must be an integer");
    const auto v = n->as_integer()->get();
    if (v < lo) return error(key, "must be >= " + std::to_string(lo));
    out = v;
  }

  void read(std::string_view key, int& out, int lo = std::numeric_limits<int>::min()) {
    std::int64_t v = out;
    read(key, v, lo);
    if (v > std::numeric_limits<int>::max()) return error(key, "is too large");
    out = static_cast<int>(v);
  }

  void read(std::string_view key, std::size_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    read(key, v, 0);
    out = static_cast<std::size_t>(v);
  }

  void read(std::string_view key, double& out) {
    const toml::node* n = take(key);
    if (!n) return;
    if (const auto d = as_double(*n)) {
      out = *d;
    } else {
      error(key, "must be a number");
    }
  }

  void read(std::string_view key, std::optional<double>& out) {
    double v = out.value_or(0.0);
    const bool present = node(key) != nullptr;
    read(key, v);
    if (present) out = v;
  }

  void read(std::string_view key, bool& out) {
    const toml::node* n = take(key);
    if (!n) return;
    if (!n->is_boolean()) return error(key, "must be true or false");
    out = n->as_boolean()->get();
  }

  void read(std::string_view key, std::string& out) {
    const toml::node* n = take(key);
    if (!n) return;
    if (!n->is_string()) return error(key, "must be a string");
    out = n->as_string()->get();
  }

  template <typename E, std::size_t N>
  void read_enum(std::string_view key, E& out, const EnumName<E> (&table)[N]) {
    std::string s;
    const bool present = node(key) != nullptr;
    read(key, s);
    if (!present || s.empty()) return;
    for (const auto& e : table)
      if (e.name == s) {
        out = e.value;
        return;
      }
    error(key, "must be one of: " + choices(table));
  }

  template <typename T>
  void read_list(std::string_view key, std::vector<T>& out) {
    const toml::node* n = take(key);
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) return error(key, "must be an array");
    std::vector<T> values;
    for (const auto& item : *arr) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!item.is_string()) return error(key, "must contain only strings");
        values.push_back(item.as_string()->get());
      } else if constexpr (std::is_floating_point_v<T>) {
        const auto d = as_double(item);
        if (!d) return error(key, "must contain only numbers");
        values.push_back(*d);
      } else {
        if (!item.is_integer()) return error(key, "must contain only integers");
        const auto v = item.as_integer()->get();
        if (std::is_unsigned_v<T> && v < 0) return error(key, "must contain only non-negative integers");
        values.push_back(static_cast<T>(v));
      }
    }
    out = std::move(values);
  }

  void finish() {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!seen_.count(std::string(k.str()))) errors_.push_back(path(k.str()) + ": unknown key");
  }

 private:
  static std::optional<double> as_double(const toml::node& n) {
    if (n.is_floating_point()) return n.as_floating_point()->get();
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    return std::nullopt;
  }

  const toml::node* node(std::string_view key) const { return table_ ? table_->get(key) : nullptr; }

  const toml::node* take(std::string_view key) {
    seen_.insert(std::string(key));
    return node(key);
  }

  std::string path(std::string_view key) const { return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key); }

  void error(std::string_view key, const std::string& what) { errors_.push_back(path(key) + ": " + what); }

  const toml::table* table_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

std::string toml_double(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <typename T, typename F>
std::string toml_list(const std::vector<T>& v, F fmt) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    throw ValidationError({msg.str()});
  }

  std::vector<std::string> errors;
  ExperimentConfig cfg;
  Section top(&root, "", errors);

  {
    auto s = top.sub("dataset");
    auto& d = cfg.dataset;
    s.read_enum("source", d.source, kSources);
    s.read("path", d.path);
    s.read("label_column", d.label_column);
    s.read("num_classes", d.num_classes);
    s.read("dim", d.dim);
    s.read("per_class", d.per_class);
    s.read("class_sep", d.class_sep);
    s.read("seed", d.seed);
    auto im = s.sub("imbalance");
    im.read_enum("kind", d.imbalance.kind, kImbalances);
    im.read_list("ratios", d.imbalance.ratios);
    im.read("factor", d.imbalance.factor);
    im.finish();
    s.finish();
  }
  {
    auto s = top.sub("split");
    s.read("initial_labeled", cfg.al.initial_labeled);
    s.read("test_fraction", cfg.al.test_fraction);
    s.read_enum("init", cfg.al.init.kind, kInits);
    s.read("rare_count", cfg.al.init.rare_count);
    s.read("main_count", cfg.al.init.main_count);
    s.finish();
  }
  {
    auto s = top.sub("al");
    s.read("budget", cfg.al.budget);
    s.read("batch", cfg.al.batch);
    s.finish();
  }
  {
    auto s = top.sub("learner");
    auto& l = cfg.al.learner;
    s.read("hidden", l.hidden);
    s.read("epochs", l.epochs);
    s.read("batch_size", l.batch_size);
    s.read("learning_rate", l.learning_rate);
    s.read("momentum", l.momentum);
    s.read("weight_decay", l.weight_decay);
    s.read_enum("loss", l.loss_mode, kLosses);
    s.finish();
  }
  {
    auto s = top.sub("superloss");
    s.read("tau", cfg.al.superloss_tau);
    s.read("lambda", cfg.al.superloss_lambda);
    s.finish();
  }
  {
    auto s = top.sub("trustset");
    s.read("size", cfg.al.trustset.size);
    s.read("use_curriculum", cfg.al.trustset.use_curriculum);
    s.read("ensemble_size", cfg.al.trustset.ensemble_size);
    s.finish();
  }
  {
    auto s = top.sub("cluster");
    auto& c = cfg.al.cluster;
    s.read("labeled_k", c.labeled_k);
    s.read("unlabeled_k", c.unlabeled_k);
    s.read("actions_per_cluster", c.actions_per_cluster);
    s.read("max_iter", c.max_iter);
    s.read("tol", c.tol);
    s.read("match_subsample", c.match_subsample);
    s.finish();
  }
  {
    auto s = top.sub("rl");
    auto& r = cfg.al.rl;
    s.read("n_env_pairs", r.n_env_pairs);
    s.read("env_labeled_fraction", r.env_labeled_fraction);
    s.read("steps_per_pair", r.steps_per_pair);
    s.read("batch_size", r.batch_size);
    s.read("learning_rate", r.learning_rate);
    s.read_list("hidden", r.hidden);
    s.read_enum("selection_order", r.selection_order, kOrders);
    s.finish();
  }
  {
    auto s = top.sub("transport");
    auto& t = cfg.al.rl.transport;
    s.read("sinkhorn_threshold", t.sinkhorn_threshold);
    s.read("sinkhorn_relative_epsilon", t.sinkhorn_relative_epsilon);
    s.read("sinkhorn_max_iters", t.sinkhorn_max_iters);
    s.finish();
  }
  {
    auto s = top.sub("experiment");
    s.read_list("strategies", cfg.strategies);
    s.read_list("seeds", cfg.seeds);
    s.read("output_dir", cfg.output_dir);
    s.read("jobs", cfg.jobs, 0);
    s.finish();
  }
  top.finish();

  // keys that failed to read keep their defaults, so the semantic pass can still run
  for (auto& e : validate_config(cfg)) errors.push_back(std::move(e));
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot open config file " + path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> e;
  const auto& d = cfg.dataset;
  if (d.source == DataSource::csv) {
    if (d.path.empty()) e.push_back("dataset.path: required when source = \"csv\"");
  } else {
    if (d.num_classes < 2) e.push_back("dataset.num_classes: must be >= 2");
    if (d.dim < 1) e.push_back("dataset.dim: must be >= 1");
    if (d.per_class < 1) e.push_back("dataset.per_class: must be >= 1");
    if (!(d.class_sep > 0.0)) e.push_back("dataset.class_sep: must be > 0");
    if (d.imbalance.kind == ImbalanceKind::linear_ratio && !d.imbalance.ratios.empty()) {
      if (static_cast<int>(d.imbalance.ratios.size()) != d.num_classes)
        e.push_back("dataset.imbalance.ratios: needs one entry per class");
      if (std::any_of(d.imbalance.ratios.begin(), d.imbalance.ratios.end(), [](double r) { return !(r > 0.0); }))
        e.push_back("dataset.imbalance.ratios: entries must be > 0");
    }
  }
  if (d.imbalance.kind == ImbalanceKind::exponential_longtail && !(d.imbalance.factor >= 1.0))
    e.push_back("dataset.imbalance.factor: must be >= 1");

  const auto& a = cfg.al;
  if (a.initial_labeled < 1) e.push_back("split.initial_labeled: must be >= 1");
  if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0)) e.push_back("split.test_fraction: must lie in (0, 1)");
  if (a.init.kind != InitKind::random && a.init.rare_count + a.init.main_count != a.initial_labeled)
    e.push_back("split.rare_count: rare_count + main_count must equal initial_labeled");
  if (a.budget < a.initial_labeled) e.push_back("al.budget: must be >= split.initial_labeled");
  if (a.batch < 1) e.push_back("al.batch: must be >= 1");

  const auto& l = a.learner;
  if (l.hidden < 1) e.push_back("learner.hidden: must be >= 1");
  if (l.epochs < 1) e.push_back("learner.epochs: must be >= 1");
  if (l.batch_size < 1) e.push_back("learner.batch_size: must be >= 1");
  if (!(l.learning_rate > 0.0)) e.push_back("learner.learning_rate: must be > 0");
  if (!(l.momentum >= 0.0 && l.momentum < 1.0)) e.push_back("learner.momentum: must lie in [0, 1)");
  if (!(l.weight_decay >= 0.0)) e.push_back("learner.weight_decay: must be >= 0");
  if (!(a.superloss_lambda > 0.0)) e.push_back("superloss.lambda: must be > 0");
  if (a.trustset.ensemble_size < 1) e.push_back("trustset.ensemble_size: must be >= 1");

  const auto& c = a.cluster;
  if (c.labeled_k < 0) e.push_back("cluster.labeled_k: must be >= 0");
  if (c.unlabeled_k < 0) e.push_back("cluster.unlabeled_k: must be >= 0");
  if (c.actions_per_cluster < 1) e.push_back("cluster.actions_per_cluster: must be >= 1");
  if (c.max_iter < 1) e.push_back("cluster.max_iter: must be >= 1");
  if (!(c.tol >= 0.0)) e.push_back("cluster.tol: must be >= 0");
  if (c.match_subsample < 1) e.push_back("cluster.match_subsample: must be >= 1");

  const auto& r = a.rl;
  if (r.n_env_pairs < 1) e.push_back("rl.n_env_pairs: must be >= 1");
  if (!(r.env_labeled_fraction > 0.0 && r.env_labeled_fraction < 1.0))
    e.push_back("rl.env_labeled_fraction: must lie in (0, 1)");
  if (r.steps_per_pair < 0) e.push_back("rl.steps_per_pair: must be >= 0");
  if (r.batch_size < 1) e.push_back("rl.batch_size: must be >= 1");
  if (!(r.learning_rate > 0.0)) e.push_back("rl.learning_rate: must be > 0");
  if (std::any_of(r.hidden.begin(), r.hidden.end(), [](int h) { return h < 1; }))
    e.push_back("rl.hidden: widths must be >= 1");
  if (r.transport.sinkhorn_threshold < 1) e.push_back("transport.sinkhorn_threshold: must be >= 1");
  if (!(r.transport.sinkhorn_relative_epsilon > 0.0)) e.push_back("transport.sinkhorn_relative_epsilon: must be > 0");
  if (r.transport.sinkhorn_max_iters < 1) e.push_back("transport.sinkhorn_max_iters: must be >= 1");

  if (cfg.strategies.empty()) e.push_back("experiment.strategies: must not be empty");
  std::set<std::string> seen_strategies;
  for (const auto& s : cfg.strategies) {
    if (!is_known_strategy(s)) e.push_back("experiment.strategies: unknown strategy '" + s + "'");
    if (!seen_strategies.insert(s).second) e.push_back("experiment.strategies: duplicate strategy '" + s + "'");
  }
  if (cfg.seeds.empty()) e.push_back("experiment.seeds: must not be empty");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    e.push_back("experiment.seeds: duplicate seed");
  if (cfg.output_dir.empty()) e.push_back("experiment.output_dir: must not be empty");
  if (cfg.jobs < 0) e.push_back("experiment.jobs: must be >= 0");
  return e;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  const auto& d = cfg.dataset;
  const auto& a = cfg.al;
  const auto dbl = [](double v) { return toml_double(v); };
  const auto integer = [](auto v) { return std::to_string(v); };
  const auto str = [](const std::string& s) { return toml_string(s); };

  o << "[dataset]\n"
    << "source = " << toml_string(std::string(name_of(kSources, d.source))) << '\n'
    << "path = " << str(d.path) << '\n'
    << "label_column = " << str(d.label_column) << '\n'
    << "num_classes = " << d.num_classes << '\n'
    << "dim = " << d.dim << '\n'
    << "per_class = " << d.per_class << '\n'
    << "class_sep = " << dbl(d.class_sep) << '\n'
    << "seed = " << d.seed << "\n\n"
    << "[dataset.imbalance]\n"
    << "kind = " << toml_string(std::string(name_of(kImbalances, d.imbalance.kind))) << '\n'
    << "ratios = " << toml_list(d.imbalance.ratios, dbl) << '\n'
    << "factor = " << dbl(d.imbalance.factor) << "\n\n";
  o << "[split]\n"
    << "initial_labeled = " << a.initial_labeled << '\n'
    << "test_fraction = " << dbl(a.test_fraction) << '\n'
    << "init = " << toml_string(std::string(name_of(kInits, a.init.kind))) << '\n'
    << "rare_count = " << a.init.rare_count << '\n'
    << "main_count = " << a.init.main_count << "\n\n";
  o << "[al]\n"
    << "budget = " << a.budget << '\n'
    << "batch = " << a.batch << "\n\n";
  o << "[learner]\n"
    << "hidden = " << a.learner.hidden << '\n'
    << "epochs = " << a.learner.epochs << '\n'
    << "batch_size = " << a.learner.batch_size << '\n'
    << "learning_rate = " << dbl(a.learner.learning_rate) << '\n'
    << "momentum = " << dbl(a.learner.momentum) << '\n'
    << "weight_decay = " << dbl(a.learner.weight_decay) << '\n'
    << "loss = " << toml_string(std::string(name_of(kLosses, a.learner.loss_mode))) << "\n\n";
  o << "[superloss]\n";
  if (a.superloss_tau) o << "tau = " << dbl(*a.superloss_tau) << '\n';
  o << "lambda = " << dbl(a.superloss_lambda) << "\n\n";
  o << "[trustset]\n"
    << "size = " << a.trustset.size << '\n'
    << "use_curriculum = " << (a.trustset.use_curriculum ? "true" : "false") << '\n'
    << "ensemble_size = " << a.trustset.ensemble_size << "\n\n";
  o << "[cluster]\n"
    << "labeled_k = " << a.cluster.labeled_k << '\n'
    << "unlabeled_k = " << a.cluster.unlabeled_k << '\n'
    << "actions_per_cluster = " << a.cluster.actions_per_cluster << '\n'
    << "max_iter = " << a.cluster.max_iter << '\n'
    << "tol = " << dbl(a.cluster.tol) << '\n'
    << "match_subsample = " << a.cluster.match_subsample << "\n\n";
  o << "[rl]\n"
    << "n_env_pairs = " << a.rl.n_env_pairs << '\n'
    << "env_labeled_fraction = " << dbl(a.rl.env_labeled_fraction) << '\n'
    << "steps_per_pair = " << a.rl.steps_per_pair << '\n'
    << "batch_size = " << a.rl.batch_size << '\n'
    << "learning_rate = " << dbl(a.rl.learning_rate) << '\n'
    << "hidden = " << toml_list(a.rl.hidden, integer) << '\n'
    << "selection_order = " << toml_string(std::string(name_of(kOrders, a.rl.selection_order))) << "\n\n";
  o << "[transport]\n"
    << "sinkhorn_threshold = " << a.rl.transport.sinkhorn_threshold << '\n'
    << "sinkhorn_relative_epsilon = " << dbl(a.rl.transport.sinkhorn_relative_epsilon) << '\n'
    << "sinkhorn_max_iters = " << a.rl.transport.sinkhorn_max_iters << "\n\n";
  o << "[experiment]\n"
    << "strategies = " << toml_list(cfg.strategies, str) << '\n'
    << "seeds = " << toml_list(cfg.seeds, integer) << '\n'
    << "output_dir = " << str(cfg.output_dir) << '\n'
    << "jobs = " << cfg.jobs << '\n';
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::shared_ptr<const Dataset> build_dataset(const DatasetConfig& cfg) {
  Dataset data = cfg.source == DataSource::csv
                     ? load_csv(cfg.path, cfg.label_column)
                     : gen_gaussian_mixture(cfg.num_classes, cfg.dim, cfg.per_class, cfg.class_sep, cfg.seed);
  if (cfg.imbalance.kind != ImbalanceKind::none) data = apply_imbalance(data, cfg.imbalance, cfg.seed);
  return std::make_shared<const Dataset>(std::move(data));
}

}  // namespace bralt
