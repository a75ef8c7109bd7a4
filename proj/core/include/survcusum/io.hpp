#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "survcusum/charts.hpp"
#include "survcusum/model.hpp"
#include "survcusum/simulate.hpp"

namespace survcusum::io {

// Patient CSV: header `hospital_id,patient_id,entry_day,followup_days,event,z1,...,zp`
// with entry_day a real day offset from study start and event in {0, 1}.
// Plain comma-separated text, no quoting. The stream horizon defaults to the
// latest exit time in the file.
struct PatientData {
    std::vector<std::pair<std::string, HospitalStream>> hospitals;  // sorted by id
    std::size_t covariate_dim = 0;
    double horizon = 0.0;
};

PatientData read_patient_csv(const std::string& path, std::optional<double> horizon = {});

// All records of the file pooled, ignoring the hospital split (model fitting
// uses the whole data set).
std::vector<PatientRecord> read_patient_records(const std::string& path);

void write_patient_csv(const std::string& path,
                       const std::vector<std::pair<std::string, HospitalStream>>& hospitals);

// Risk model document: JSON with `baseline.kind`, `baseline.params` and
// `beta`. Unknown keys are rejected.
RiskModel read_risk_model(const std::string& path);
void write_risk_model(const std::string& path, const RiskModel& model,
                      const std::vector<double>& standard_errors = {});

// Chart series: CSV `time,value`, or a JSON document carrying the spec,
// points, control limit and detection time.
void write_series_csv(const std::string& path, const ChartSeries& series);
std::vector<ChartPoint> read_series_csv(const std::string& path);
void write_series_json(const std::string& path, const ChartSeries& series,
                       std::optional<double> control_limit, std::optional<double> detection);

void write_funnel_csv(const std::string& path, const std::vector<FunnelRow>& rows);

void write_run_length_csv(const std::string& path, const std::vector<RunLengthRow>& rows,
                          const std::vector<std::optional<double>>& theory);
void write_power_csv(const std::string& path, const std::vector<PowerCurve>& curves);
void write_control_limit_csv(const std::string& path, const std::vector<std::string>& charts,
                             const std::vector<double>& limits);

// Declarative experiment description consumed by the calibrate and simulate
// commands. Schema-validated: unknown keys are rejected.
struct ExperimentConfig {
    SimConfig sim;
    std::vector<ChartSpec> charts;
    std::optional<CalibrationTarget> target;  // calibrate
    std::vector<double> control_limits;       // simulate
    std::vector<double> power_grid;           // optional, days
};

ExperimentConfig read_experiment_config(const std::string& path);

// 64-bit FNV-1a of the canonicalized config document, hex-encoded; identical
// configs hash identically regardless of formatting.
std::string experiment_config_hash(const std::string& path);

void write_manifest(const std::string& path, const std::string& command,
                    const std::string& config_hash, std::uint64_t seed,
                    const std::vector<std::string>& outputs);

// Generic helper for small comma-separated tables (header + rows).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace survcusum::io
