#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "penlab/models.hpp"
#include "penlab/scenario.hpp"
#include "penlab/selection.hpp"

namespace penlab {

// The procedures of the simulation study. Letters A-L follow the CLI
// token scheme; Id* are the scenario-aware calibrated references.
enum class ProcId {
  Epenid,   // A
  MalEst,   // B
  MalMax,   // C
  HO,       // D
  Vfcv2,    // E
  Vfcv5,    // F
  Vfcv10,   // G
  PenHO,    // H
  PenVF2,   // I
  PenVF5,   // J
  PenVF10,  // K
  PenLoo,   // L
  IdLin,
  IdDim,
  IdPenHO,
  IdPenVF2,
  IdPenVF5,
  IdPenVF10,
  IdPenLoo,
  IdEpenid,
};

std::string proc_name(ProcId id);
bool proc_is_penalized(ProcId id);  // whether an overpenalization factor applies

struct ProcedureInstance {
  ProcId id = ProcId::PenLoo;
  double cov = 1.0;  // ignored for non-penalized procedures
};

// Tokens: letters with optional factor suffix ("L", "J2", "C1.25"), long
// names ("penLoo2", "mal-max"), Id names ("IdDim", "IdPenLoo"), or "all".
// Bare penalized tokens expand over the factor grid.
std::vector<ProcedureInstance> parse_procedures(const std::vector<std::string>& tokens,
                                                const std::vector<double>& cov_grid);

struct ExperimentConfig {
  RegressionScenario scenario;
  CollectionSpec collection;
  int replications = 1000;
  std::uint64_t seed = 0;
  std::vector<ProcedureInstance> procedures;
  std::vector<double> cov_grid = {1.0, 1.25, 2.0, 3.0, 4.0};
  std::string out_dir = "out";
  int threads = 1;
  std::string experiment_name;  // nonempty when built from a named experiment
};

// Scenario plus the collection the study pairs it with.
ExperimentConfig experiment_preset(const std::string& name);

// "reg"|"reg-half"|"reg-t=<t>"|"reg-var" and "log"|"log2"|<integer>.
CollectionSpec parse_collection_spec(const std::string& family, const std::string& rule);

// Reads a TOML config or a manifest.json written by emit_outputs.
ExperimentConfig load_config(const std::string& path);

struct ProcResult {
  ProcId id;
  double cov;
  ModelIndex model;
  double loss;
};

struct ReplicationRecord {
  int replication = 0;
  ModelIndex oracle_model;
  double oracle_loss = 0.0;
  std::vector<ProcResult> results;
};

// Runs the full replication loop. Deterministic given the seed, independent
// of the thread count; per-replication streams are derived from
// (seed, replication, purpose).
std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& config);

struct CorEntry {
  ProcId id;
  double cov;
  double cor;
  double epsilon;  // NaN when replications < 2
};

struct CorReport {
  std::vector<CorEntry> entries;
};

CorReport compute_cor(const std::vector<ReplicationRecord>& records,
                      const std::vector<ProcedureInstance>& procedures);

// log10 relative selection frequency per (d1, d2) cell; the constant model
// maps to (0, 0). Only selected cells are present.
struct Heatmap {
  std::string which;
  std::map<std::pair<int, int>, double> cells;
  int replications = 0;
};

// which: "oracle", a procedure name, or a letter token (with optional
// factor suffix). Records must come from a split-1/2 collection.
Heatmap selection_heatmap(const std::vector<ReplicationRecord>& records,
                          const std::string& which);

// Writes records.csv, cor.csv, heatmap_<which>.csv and manifest.json.
void emit_outputs(const std::vector<ReplicationRecord>& records, const CorReport& report,
                  const std::vector<Heatmap>& heatmaps, const std::string& dir,
                  const ExperimentConfig& config, double wall_seconds);

// Reverse of the records.csv serialization; used for round-trips and the
// heatmap subcommand.
std::vector<ReplicationRecord> read_records_csv(const std::string& path,
                                                std::vector<ProcedureInstance>* procedures);

std::string csv_double(double v);  // round-trip exact decimal form (%.17g)

}  // namespace penlab
