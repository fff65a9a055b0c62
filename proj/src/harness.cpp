#include "penlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "penlab/penalties.hpp"
#include "penlab/risk_decomposition.hpp"
#include "penlab/toml_lite.hpp"

namespace penlab {

namespace fs = std::filesystem;
using nlohmann::json;

static constexpr const char* kVersion = "0.1.0";

std::string proc_name(ProcId id) {
  switch (id) {
    case ProcId::Epenid: return "Epenid";
    case ProcId::MalEst: return "MalEst";
    case ProcId::MalMax: return "MalMax";
    case ProcId::HO: return "HO";
    case ProcId::Vfcv2: return "2FCV";
    case ProcId::Vfcv5: return "5FCV";
    case ProcId::Vfcv10: return "10FCV";
    case ProcId::PenHO: return "penHO";
    case ProcId::PenVF2: return "pen2F";
    case ProcId::PenVF5: return "pen5F";
    case ProcId::PenVF10: return "pen10F";
    case ProcId::PenLoo: return "penLoo";
    case ProcId::IdLin: return "IdLin";
    case ProcId::IdDim: return "IdDim";
    case ProcId::IdPenHO: return "IdPenHO";
    case ProcId::IdPenVF2: return "IdPen2F";
    case ProcId::IdPenVF5: return "IdPen5F";
    case ProcId::IdPenVF10: return "IdPen10F";
    case ProcId::IdPenLoo: return "IdPenLoo";
    case ProcId::IdEpenid: return "IdEpenid";
  }
  return "?";
}

bool proc_is_penalized(ProcId id) {
  switch (id) {
    case ProcId::Epenid:
    case ProcId::MalEst:
    case ProcId::MalMax:
    case ProcId::PenHO:
    case ProcId::PenVF2:
    case ProcId::PenVF5:
    case ProcId::PenVF10:
    case ProcId::PenLoo:
      return true;
    default:
      return false;
  }
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip_dashes(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c != '-' && c != '_') out.push_back(c);
  }
  return out;
}

std::optional<ProcId> proc_by_key(const std::string& key) {
  static const std::map<std::string, ProcId> names = {
      {"a", ProcId::Epenid},        {"epenid", ProcId::Epenid},
      {"b", ProcId::MalEst},        {"malest", ProcId::MalEst},
      {"c", ProcId::MalMax},        {"malmax", ProcId::MalMax},
      {"d", ProcId::HO},            {"ho", ProcId::HO},
      {"e", ProcId::Vfcv2},         {"2fcv", ProcId::Vfcv2},
      {"f", ProcId::Vfcv5},         {"5fcv", ProcId::Vfcv5},
      {"g", ProcId::Vfcv10},        {"10fcv", ProcId::Vfcv10},
      {"h", ProcId::PenHO},         {"penho", ProcId::PenHO},
      {"i", ProcId::PenVF2},        {"pen2f", ProcId::PenVF2},
      {"j", ProcId::PenVF5},        {"pen5f", ProcId::PenVF5},
      {"k", ProcId::PenVF10},       {"pen10f", ProcId::PenVF10},
      {"l", ProcId::PenLoo},        {"penloo", ProcId::PenLoo},
      {"idlin", ProcId::IdLin},     {"iddim", ProcId::IdDim},
      {"idpenho", ProcId::IdPenHO}, {"idpen2f", ProcId::IdPenVF2},
      {"idpen5f", ProcId::IdPenVF5},{"idpen10f", ProcId::IdPenVF10},
      {"idpenloo", ProcId::IdPenLoo},{"idepenid", ProcId::IdEpenid},
  };
  const auto it = names.find(key);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

// splits "J2" / "penLoo1.25" into the procedure key and the factor suffix
std::pair<std::string, std::optional<double>> split_token(const std::string& token) {
  std::size_t cut = token.size();
  while (cut > 0) {
    const char c = token[cut - 1];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      --cut;
    } else {
      break;
    }
  }
  // names like "2fcv" start with a digit; only a suffix after a letter counts
  if (cut == 0 || cut == token.size()) return {token, std::nullopt};
  return {token.substr(0, cut), std::stod(token.substr(cut))};
}

const std::vector<ProcId> kAllRoster = {
    ProcId::Epenid, ProcId::MalEst,  ProcId::MalMax,  ProcId::HO,
    ProcId::Vfcv2,  ProcId::Vfcv5,   ProcId::Vfcv10,  ProcId::PenHO,
    ProcId::PenVF2, ProcId::PenVF5,  ProcId::PenVF10, ProcId::PenLoo,
    ProcId::IdLin,  ProcId::IdDim,   ProcId::IdPenHO, ProcId::IdPenVF2,
    ProcId::IdPenVF5, ProcId::IdPenVF10, ProcId::IdPenLoo, ProcId::IdEpenid,
};

}  // namespace

std::vector<ProcedureInstance> parse_procedures(const std::vector<std::string>& tokens,
                                                const std::vector<double>& cov_grid) {
  std::vector<ProcedureInstance> out;
  const auto push = [&](ProcId id, std::optional<double> cov) {
    if (!proc_is_penalized(id)) {
      if (cov.has_value()) {
        throw std::invalid_argument("procedure " + proc_name(id) +
                                    " takes no overpenalization factor");
      }
      out.push_back({id, 1.0});
      return;
    }
    if (cov.has_value()) {
      out.push_back({id, *cov});
    } else {
      for (double c : cov_grid) out.push_back({id, c});
    }
  };

  for (const std::string& raw : tokens) {
    const std::string token = lower(strip_dashes(raw));
    if (token == "all") {
      for (ProcId id : kAllRoster) push(id, std::nullopt);
      continue;
    }
    const auto [key, cov] = split_token(token);
    const std::optional<ProcId> id = proc_by_key(key);
    if (!id.has_value()) throw std::invalid_argument("unknown procedure token: " + raw);
    push(*id, cov);
  }

  // duplicates would double-count rows in every output
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i].id == out[j].id && out[i].cov == out[j].cov) {
        throw std::invalid_argument("duplicate procedure: " + proc_name(out[i].id));
      }
    }
  }
  return out;
}

ExperimentConfig experiment_preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.scenario = make_scenario(name);
  cfg.experiment_name = cfg.scenario.name;
  cfg.collection.family = CollectionSpec::Family::TwoRegimeHalf;
  cfg.collection.rule = cfg.scenario.name == "X1-005mu02" ? CollectionSpec::MaxDimRule::LogSqN
                                                          : CollectionSpec::MaxDimRule::LogN;
  return cfg;
}

CollectionSpec parse_collection_spec(const std::string& family, const std::string& rule) {
  CollectionSpec spec;
  const std::string f = lower(family);
  if (f == "reg") {
    spec.family = CollectionSpec::Family::Regular;
  } else if (f == "reg-half") {
    spec.family = CollectionSpec::Family::TwoRegimeHalf;
  } else if (f.rfind("reg-t=", 0) == 0) {
    spec.family = CollectionSpec::Family::TwoRegimeAt;
    spec.split = std::stod(f.substr(6));
  } else if (f == "reg-var") {
    spec.family = CollectionSpec::Family::TwoRegimeVariable;
  } else {
    throw std::invalid_argument("unknown collection: " + family);
  }
  const std::string r = lower(rule);
  if (r == "log") {
    spec.rule = CollectionSpec::MaxDimRule::LogN;
  } else if (r == "log2") {
    spec.rule = CollectionSpec::MaxDimRule::LogSqN;
  } else {
    spec.rule = CollectionSpec::MaxDimRule::Explicit;
    spec.explicit_max = std::stoi(r);
  }
  return spec;
}

namespace {

std::pair<std::string, std::string> collection_strings(const CollectionSpec& spec) {
  std::string fam;
  switch (spec.family) {
    case CollectionSpec::Family::Regular: fam = "reg"; break;
    case CollectionSpec::Family::TwoRegimeHalf: fam = "reg-half"; break;
    case CollectionSpec::Family::TwoRegimeAt: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "reg-t=%.17g", spec.split);
      fam = buf;
      break;
    }
    case CollectionSpec::Family::TwoRegimeVariable: fam = "reg-var"; break;
  }
  std::string rule;
  switch (spec.rule) {
    case CollectionSpec::MaxDimRule::LogN: rule = "log"; break;
    case CollectionSpec::MaxDimRule::LogSqN: rule = "log2"; break;
    case CollectionSpec::MaxDimRule::Explicit: rule = std::to_string(spec.explicit_max); break;
  }
  return {fam, rule};
}

NoiseLaw parse_noise(const std::string& s) {
  const std::string k = lower(s);
  if (k == "gaussian") return NoiseLaw::Gaussian;
  if (k == "truncated-gaussian") return NoiseLaw::TruncatedGaussian;
  throw std::invalid_argument("unknown noise law: " + s);
}

ExperimentConfig config_from_toml(const TomlLite& toml) {
  ExperimentConfig cfg;
  if (toml.has("experiment")) {
    cfg = experiment_preset(toml.get_string("experiment"));
    if (toml.has("n")) cfg.scenario.n = static_cast<int>(toml.get_int("n"));
  } else {
    const std::vector<double> levels = toml.get_double_array("sigma");
    if (levels.size() != 2) {
      throw std::invalid_argument("config key 'sigma' must hold the two noise levels");
    }
    const NoiseLaw law = toml.has("noise") ? parse_noise(toml.get_string("noise"))
                                           : NoiseLaw::Gaussian;
    const double cutoff = toml.has("noise_cutoff") ? toml.get_double("noise_cutoff") : 4.0;
    // the shape key doubles as the scenario name so that the manifest can
    // reconstruct the scenario
    cfg.scenario = custom_scenario(toml.get_string("s"),
                                   regression_shape(toml.get_string("s")),
                                   two_level_noise(levels[0], levels[1]),
                                   toml.get_double("mu"), static_cast<int>(toml.get_int("n")),
                                   law, cutoff);
    cfg.collection.family = CollectionSpec::Family::TwoRegimeHalf;
    cfg.collection.rule = CollectionSpec::MaxDimRule::LogN;
  }
  if (toml.has("collection") || toml.has("maxdim_rule")) {
    const std::string fam = toml.has("collection") ? toml.get_string("collection") : "reg-half";
    const std::string rule = toml.has("maxdim_rule") ? toml.get_string("maxdim_rule") : "log";
    cfg.collection = parse_collection_spec(fam, rule);
  }
  if (toml.has("replications")) cfg.replications = static_cast<int>(toml.get_int("replications"));
  if (toml.has("seed")) cfg.seed = static_cast<std::uint64_t>(toml.get_int("seed"));
  if (toml.has("cov_grid")) cfg.cov_grid = toml.get_double_array("cov_grid");
  if (toml.has("threads")) cfg.threads = static_cast<int>(toml.get_int("threads"));
  if (toml.has("out")) cfg.out_dir = toml.get_string("out");
  const std::vector<std::string> tokens =
      toml.has("procedures") ? toml.get_string_array("procedures")
                             : std::vector<std::string>{"all"};
  cfg.procedures = parse_procedures(tokens, cfg.cov_grid);
  return cfg;
}

ExperimentConfig config_from_manifest(const json& manifest) {
  const json& c = manifest.contains("config") ? manifest.at("config") : manifest;
  ExperimentConfig cfg;
  const json& sc = c.at("scenario");
  if (sc.contains("experiment")) {
    cfg = experiment_preset(sc.at("experiment").get<std::string>());
    if (sc.contains("n")) cfg.scenario.n = sc.at("n").get<int>();
  } else {
    const std::vector<double> levels = sc.at("sigma").get<std::vector<double>>();
    cfg.scenario = custom_scenario(
        sc.at("s").get<std::string>(), regression_shape(sc.at("s").get<std::string>()),
        two_level_noise(levels.at(0), levels.at(1)), sc.at("mu").get<double>(),
        sc.at("n").get<int>(),
        sc.contains("noise") ? parse_noise(sc.at("noise").get<std::string>())
                             : NoiseLaw::Gaussian,
        sc.contains("noise_cutoff") ? sc.at("noise_cutoff").get<double>() : 4.0);
  }
  cfg.collection = parse_collection_spec(c.at("collection").get<std::string>(),
                                    c.at("maxdim_rule").get<std::string>());
  cfg.replications = c.at("replications").get<int>();
  cfg.seed = std::stoull(c.at("seed").get<std::string>());
  cfg.cov_grid = c.at("cov_grid").get<std::vector<double>>();
  cfg.threads = c.at("threads").get<int>();
  cfg.out_dir = c.at("out").get<std::string>();
  for (const json& p : c.at("procedures")) {
    const std::string name = lower(strip_dashes(p.at("name").get<std::string>()));
    const std::optional<ProcId> id = proc_by_key(name);
    if (!id.has_value()) throw std::runtime_error("manifest procedure unknown: " + name);
    cfg.procedures.push_back({*id, p.contains("cov") ? p.at("cov").get<double>() : 1.0});
  }
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json manifest;
    in >> manifest;
    return config_from_manifest(manifest);
  }
  return config_from_toml(TomlLite::parse_file(path));
}

namespace {

struct ModelPrep {
  ModelIndex index;
  Partition partition;
  BinMoments moments;
  double expected_ideal = 0.0;
  double malmax_base = 0.0;
};

struct Needs {
  bool split = false;
  bool vf2 = false, vf5 = false, vf10 = false;
  bool pen_ho = false, pen_v2 = false, pen_v5 = false, pen_v10 = false, pen_loo = false;
  bool crit_ho = false, crit2 = false, crit5 = false, crit10 = false;
  bool epenid = false, malest = false, malmax = false;
};

Needs roster_needs(const std::vector<ProcedureInstance>& procedures) {
  Needs nd;
  for (const ProcedureInstance& p : procedures) {
    switch (p.id) {
      case ProcId::Epenid:
      case ProcId::IdEpenid: nd.epenid = true; break;
      case ProcId::MalEst: nd.malest = true; break;
      case ProcId::MalMax: nd.malmax = true; break;
      case ProcId::HO: nd.split = nd.crit_ho = true; break;
      case ProcId::Vfcv2: nd.vf2 = nd.crit2 = true; break;
      case ProcId::Vfcv5: nd.vf5 = nd.crit5 = true; break;
      case ProcId::Vfcv10: nd.vf10 = nd.crit10 = true; break;
      case ProcId::PenHO:
      case ProcId::IdPenHO: nd.split = nd.pen_ho = true; break;
      case ProcId::PenVF2:
      case ProcId::IdPenVF2: nd.vf2 = nd.pen_v2 = true; break;
      case ProcId::PenVF5:
      case ProcId::IdPenVF5: nd.vf5 = nd.pen_v5 = true; break;
      case ProcId::PenVF10:
      case ProcId::IdPenVF10: nd.vf10 = nd.pen_v10 = true; break;
      case ProcId::PenLoo:
      case ProcId::IdPenLoo: nd.pen_loo = true; break;
      case ProcId::IdLin:
      case ProcId::IdDim: break;
    }
  }
  return nd;
}

// substream purposes of the per-replication streams
enum : std::uint64_t { kStreamSample = 0, kStreamHoldout = 1, kStreamFold2 = 2,
                       kStreamFold5 = 3, kStreamFold10 = 4 };

ReplicationRecord simulate_one(int r, const ExperimentConfig& cfg,
                               const std::vector<ModelPrep>& prep, const Needs& nd) {
  RngStream gs(cfg.seed, static_cast<std::uint64_t>(r), kStreamSample);
  const Dataset data = sample(cfg.scenario, gs);
  const int n = data.n();

  std::optional<HoldoutSplit> split;
  if (nd.split) {
    RngStream g(cfg.seed, static_cast<std::uint64_t>(r), kStreamHoldout);
    split = make_holdout_split(data, g);
  }
  std::optional<FoldAssignment> folds2, folds5, folds10;
  if (nd.vf2) {
    RngStream g(cfg.seed, static_cast<std::uint64_t>(r), kStreamFold2);
    folds2 = make_vfold_assignment(data, 2, g);
  }
  if (nd.vf5) {
    RngStream g(cfg.seed, static_cast<std::uint64_t>(r), kStreamFold5);
    folds5 = make_vfold_assignment(data, 5, g);
  }
  if (nd.vf10) {
    RngStream g(cfg.seed, static_cast<std::uint64_t>(r), kStreamFold10);
    folds10 = make_vfold_assignment(data, 10, g);
  }

  const double sig2_hat = nd.malest ? estimate_variance_diff(data) : 0.0;

  CriterionTable table;
  std::vector<double> dims;
  std::vector<double> pen_epenid, pen_malest, pen_malmax, pen_hold, pen_2, pen_5, pen_10, pen_l;
  std::vector<double> crit_hold, crit_2, crit_5, crit_10;

  for (const ModelPrep& mp : prep) {
    const FittedHistogram f = fit(data, mp.partition);
    if (*std::min_element(f.count.begin(), f.count.end()) < 2) continue;

    CriterionRow row;
    row.model = mp.index;
    row.emp_risk = training_risk(f);
    row.criterion = row.emp_risk;
    row.excess_loss = excess_loss_of_values(f.mean, mp.moments);
    row.has_excess_loss = true;
    table.rows.push_back(row);
    dims.push_back(mp.index.dim());

    if (nd.epenid) pen_epenid.push_back(mp.expected_ideal);
    if (nd.malest) pen_malest.push_back(2.0 * sig2_hat * mp.index.dim() / n);
    if (nd.malmax) pen_malmax.push_back(mp.malmax_base);
    if (nd.pen_ho) pen_hold.push_back(pen_holdout(data, mp.partition, *split));
    if (nd.pen_v2) pen_2.push_back(pen_vfold(data, mp.partition, *folds2));
    if (nd.pen_v5) pen_5.push_back(pen_vfold(data, mp.partition, *folds5));
    if (nd.pen_v10) pen_10.push_back(pen_vfold(data, mp.partition, *folds10));
    if (nd.pen_loo) pen_l.push_back(pen_loo(data, mp.partition));
    if (nd.crit_ho) crit_hold.push_back(holdout_criterion(data, mp.partition, *split));
    if (nd.crit2) crit_2.push_back(vfcv_criterion(data, mp.partition, *folds2));
    if (nd.crit5) crit_5.push_back(vfcv_criterion(data, mp.partition, *folds5));
    if (nd.crit10) crit_10.push_back(vfcv_criterion(data, mp.partition, *folds10));
  }
  if (table.rows.empty()) {
    throw std::runtime_error("all models filtered: sample too small for the collection");
  }

  ReplicationRecord rec;
  rec.replication = r;
  {
    int best = 0;
    for (int i = 1; i < static_cast<int>(table.rows.size()); ++i) {
      if (table.rows[i].excess_loss < table.rows[best].excess_loss ||
          (table.rows[i].excess_loss == table.rows[best].excess_loss &&
           model_less(table.rows[i].model, table.rows[best].model))) {
        best = i;
      }
    }
    rec.oracle_model = table.rows[best].model;
    rec.oracle_loss = table.rows[best].excess_loss;
  }

  const auto base_vector = [&](ProcId id) -> const std::vector<double>& {
    switch (id) {
      case ProcId::Epenid:
      case ProcId::IdEpenid: return pen_epenid;
      case ProcId::MalEst: return pen_malest;
      case ProcId::MalMax: return pen_malmax;
      case ProcId::PenHO:
      case ProcId::IdPenHO: return pen_hold;
      case ProcId::PenVF2:
      case ProcId::IdPenVF2: return pen_2;
      case ProcId::PenVF5:
      case ProcId::IdPenVF5: return pen_5;
      case ProcId::PenVF10:
      case ProcId::IdPenVF10: return pen_10;
      case ProcId::PenLoo:
      case ProcId::IdPenLoo: return pen_l;
      default: throw std::logic_error("no base penalty for this procedure");
    }
  };

  for (const ProcedureInstance& inst : cfg.procedures) {
    SelectionOutcome out;
    switch (inst.id) {
      case ProcId::HO:
      case ProcId::Vfcv2:
      case ProcId::Vfcv5:
      case ProcId::Vfcv10: {
        const std::vector<double>& crit = inst.id == ProcId::HO      ? crit_hold
                                          : inst.id == ProcId::Vfcv2 ? crit_2
                                          : inst.id == ProcId::Vfcv5 ? crit_5
                                                                     : crit_10;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          table.rows[i].penalty = 0.0;
          table.rows[i].criterion = crit[i];
        }
        out = select_penalized(table);
        break;
      }
      case ProcId::IdDim:
        out = ideal_dim(table);
        break;
      case ProcId::IdLin:
        out = ideal_pen(table, dims);
        break;
      case ProcId::IdPenHO:
      case ProcId::IdPenVF2:
      case ProcId::IdPenVF5:
      case ProcId::IdPenVF10:
      case ProcId::IdPenLoo:
      case ProcId::IdEpenid:
        out = ideal_pen(table, base_vector(inst.id));
        break;
      default: {  // penalized procedures with an overpenalization factor
        const std::vector<double>& base = base_vector(inst.id);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          table.rows[i].penalty = inst.cov * base[i];
          table.rows[i].criterion = table.rows[i].emp_risk + table.rows[i].penalty;
        }
        out = select_penalized(table);
        break;
      }
    }
    rec.results.push_back({inst.id, inst.cov, out.model, out.excess_loss});
  }
  return rec;
}

}  // namespace

std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("need at least one replication");
  // an empty roster is allowed: records then carry only the oracle

  const std::vector<ModelIndex> models = enumerate_models(config.collection, config.scenario.n);
  const Needs nd = roster_needs(config.procedures);

  std::vector<ModelPrep> prep(models.size());
  {
    const double sup = config.scenario.sigma_sup();
    for (std::size_t i = 0; i < models.size(); ++i) {
      prep[i].index = models[i];
      prep[i].partition = build_partition(models[i]);
      prep[i].moments = bin_moments(config.scenario, prep[i].partition);
      if (nd.epenid) {
        prep[i].expected_ideal = expected_ideal_penalty(prep[i].moments, config.scenario.n);
      }
      if (nd.malmax) {
        prep[i].malmax_base = 2.0 * sup * sup * models[i].dim() / config.scenario.n;
      }
    }
  }

  std::vector<ReplicationRecord> records(config.replications);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= config.replications) return;
      try {
        records[r] = simulate_one(r, config, prep, nd);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return records;
}

CorReport compute_cor(const std::vector<ReplicationRecord>& records,
                      const std::vector<ProcedureInstance>& procedures) {
  const int n_rec = static_cast<int>(records.size());
  if (n_rec < 1) throw std::invalid_argument("no records");

  double oracle_mean = 0.0;
  for (const ReplicationRecord& r : records) oracle_mean += r.oracle_loss;
  oracle_mean /= n_rec;
  if (!(oracle_mean > 0.0)) {
    throw std::runtime_error("degenerate experiment: zero mean oracle loss");
  }

  CorReport report;
  for (std::size_t k = 0; k < procedures.size(); ++k) {
    double mean = 0.0;
    for (const ReplicationRecord& r : records) mean += r.results[k].loss;
    mean /= n_rec;
    double var = 0.0;
    if (n_rec >= 2) {
      for (const ReplicationRecord& r : records) {
        const double d = r.results[k].loss - mean;
        var += d * d;
      }
      var /= (n_rec - 1);
    }
    CorEntry e;
    e.id = procedures[k].id;
    e.cov = procedures[k].cov;
    e.cor = mean / oracle_mean;
    e.epsilon = n_rec >= 2 ? std::sqrt(var) / (std::sqrt(static_cast<double>(n_rec)) * oracle_mean)
                           : std::numeric_limits<double>::quiet_NaN();
    report.entries.push_back(e);
  }
  return report;
}

namespace {

std::pair<int, int> heat_cell(const ModelIndex& m) {
  if (m.kind == ModelKind::Constant) return {0, 0};
  if (m.split != 0.5) {
    throw std::runtime_error("heatmaps require a collection split at 1/2");
  }
  return {m.d1, m.d2};
}

}  // namespace

Heatmap selection_heatmap(const std::vector<ReplicationRecord>& records,
                          const std::string& which) {
  if (records.empty()) throw std::invalid_argument("no records");
  Heatmap heat;
  heat.which = which;
  heat.replications = static_cast<int>(records.size());

  std::map<std::pair<int, int>, int> counts;
  if (lower(which) == "oracle") {
    for (const ReplicationRecord& r : records) counts[heat_cell(r.oracle_model)] += 1;
  } else {
    const auto [key, cov] = split_token(lower(strip_dashes(which)));
    const std::optional<ProcId> id = proc_by_key(key);
    if (!id.has_value()) throw std::invalid_argument("unknown heatmap target: " + which);
    const double want_cov = cov.value_or(1.0);
    int slot = -1;
    for (std::size_t k = 0; k < records[0].results.size(); ++k) {
      const ProcResult& pr = records[0].results[k];
      if (pr.id == *id && (!proc_is_penalized(*id) || pr.cov == want_cov)) {
        slot = static_cast<int>(k);
        break;
      }
    }
    if (slot < 0) {
      throw std::invalid_argument("procedure not present in the records: " + which);
    }
    for (const ReplicationRecord& r : records) counts[heat_cell(r.results[slot].model)] += 1;
  }

  for (const auto& [cell, count] : counts) {
    heat.cells[cell] = std::log10(static_cast<double>(count) / heat.replications);
  }
  return heat;
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_outputs(const std::vector<ReplicationRecord>& records, const CorReport& report,
                  const std::vector<Heatmap>& heatmaps, const std::string& dir,
                  const ExperimentConfig& config, double wall_seconds) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());

  const auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return out;
  };

  {
    std::ofstream out = open("records.csv");
    out << "replication,procedure,C_ov,D1,D2,split,loss\n";
    for (const ReplicationRecord& r : records) {
      const auto model_cols = [&](const ModelIndex& m) {
        if (m.kind == ModelKind::Constant) return std::string("0,0,");
        return std::to_string(m.d1) + "," + std::to_string(m.d2) + "," + csv_double(m.split);
      };
      out << r.replication << ",oracle,," << model_cols(r.oracle_model) << ','
          << csv_double(r.oracle_loss) << '\n';
      for (const ProcResult& p : r.results) {
        out << r.replication << ',' << proc_name(p.id) << ',';
        if (proc_is_penalized(p.id)) out << csv_double(p.cov);
        out << ',' << model_cols(p.model) << ',' << csv_double(p.loss) << '\n';
      }
    }
  }

  {
    std::ofstream out = open("cor.csv");
    out << "procedure,C_ov,C_or,epsilon\n";
    for (const CorEntry& e : report.entries) {
      out << proc_name(e.id) << ',';
      if (proc_is_penalized(e.id)) out << csv_double(e.cov);
      out << ',' << csv_double(e.cor) << ',' << csv_double(e.epsilon) << '\n';
    }
  }

  for (const Heatmap& h : heatmaps) {
    std::ofstream out = open("heatmap_" + lower(h.which) + ".csv");
    out << "D1,D2,log10freq\n";
    for (const auto& [cell, value] : h.cells) {
      out << cell.first << ',' << cell.second << ',' << csv_double(value) << '\n';
    }
  }

  {
    const auto [fam, rule] = collection_strings(config.collection);
    json manifest;
    manifest["penlab_version"] = kVersion;
    manifest["wall_time_seconds"] = wall_seconds;
    json cfg;
    json sc;
    if (!config.experiment_name.empty()) {
      sc["experiment"] = config.experiment_name;
      sc["n"] = config.scenario.n;
    } else {
      sc["s"] = config.scenario.name;
      sc["sigma"] = config.scenario.sigma.levels;
      sc["mu"] = config.scenario.mu;
      sc["n"] = config.scenario.n;
      sc["noise"] = config.scenario.noise == NoiseLaw::Gaussian ? "gaussian"
                                                                : "truncated-gaussian";
      sc["noise_cutoff"] = config.scenario.noise_cutoff;
    }
    cfg["scenario"] = sc;
    cfg["collection"] = fam;
    cfg["maxdim_rule"] = rule;
    cfg["replications"] = config.replications;
    cfg["seed"] = std::to_string(config.seed);
    json procs = json::array();
    for (const ProcedureInstance& p : config.procedures) {
      json jp;
      jp["name"] = proc_name(p.id);
      if (proc_is_penalized(p.id)) jp["cov"] = p.cov;
      procs.push_back(jp);
    }
    cfg["procedures"] = procs;
    cfg["cov_grid"] = config.cov_grid;
    cfg["threads"] = config.threads;
    cfg["out"] = config.out_dir;
    manifest["config"] = cfg;

    std::ofstream out = open("manifest.json");
    out << manifest.dump(2) << '\n';
  }
}

std::vector<ReplicationRecord> read_records_csv(const std::string& path,
                                                std::vector<ProcedureInstance>* procedures) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "replication,procedure,C_ov,D1,D2,split,loss") {
    throw std::runtime_error("unexpected records.csv header in " + path);
  }

  std::vector<ReplicationRecord> records;
  std::vector<ProcedureInstance> roster;
  bool roster_done = false;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
    if (cols.size() != 7) throw std::runtime_error("malformed records row: " + line);

    const int replication = std::stoi(cols[0]);
    const int d1 = std::stoi(cols[3]);
    const int d2 = std::stoi(cols[4]);
    const double loss = std::stod(cols[6]);
    ModelIndex model = (d1 == 0 && d2 == 0)
                           ? ModelIndex::constant()
                           : ModelIndex::two_regime(d1, d2, std::stod(cols[5]));

    if (records.empty() || records.back().replication != replication) {
      records.push_back({});
      records.back().replication = replication;
      roster_done = records.size() > 1;
    }
    ReplicationRecord& rec = records.back();
    if (cols[1] == "oracle") {
      rec.oracle_model = model;
      rec.oracle_loss = loss;
      continue;
    }
    const std::optional<ProcId> id = proc_by_key(lower(strip_dashes(cols[1])));
    if (!id.has_value()) throw std::runtime_error("unknown procedure in records: " + cols[1]);
    const double cov = cols[2].empty() ? 1.0 : std::stod(cols[2]);
    rec.results.push_back({*id, cov, model, loss});
    if (!roster_done) roster.push_back({*id, cov});
  }
  if (procedures != nullptr) *procedures = roster;
  return records;
}

}  // namespace penlab
