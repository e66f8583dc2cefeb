#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fbmcsim {

// Monte Carlo experiment description; loaded from a JSON file (one file per
// figure replica under experiments/).
struct SweepSpec {
    std::string parameter = "none";  // none|num_antennas|snr_db|num_aps|nu
    std::vector<double> values;      // empty => single point at the scalar fields
};

struct FseSpec {
    std::vector<int> lengths{9};              // 0 means combining-only
    std::string design = "mmse";              // zf|mmse
    std::vector<std::string> references{"pdp"};  // pdp|equivalent|approx_pdp
};

struct ChannelSpec {
    double rms_delay_ns = 100.0;
    double sample_rate_hz = 20e6;
    double threshold_db = -20.0;
    int max_taps = 16;
    std::string table_file;  // optional override of the embedded TDL-C table
};

struct CellFreeSpec {
    int num_aps = 9;
    int antennas_per_ap = 4;
    double area_km = 1.0;
    double nu = 0.5;
    double bandwidth_hz = 20e6;
    double noise_figure_db = 9.0;
    double p_max_watt = 0.2;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string scenario = "colocated";  // colocated|cellfree
    std::string waveform = "fbmc";       // fbmc|ofdm|both
    int num_users = 4;
    int num_subcarriers = 64;
    int overlap = 4;
    int num_antennas = 128;  // colocated count when not swept
    double snr_db = 10.0;
    std::string combiner = "zf";  // mrc|zf|mmse
    std::string csi = "perfect";  // perfect|estimated
    std::vector<std::string> corrections{"none"};  // none|scale|subtract_small|subtract_cellfree
    bool noiseless = false;  // SIR mode: zero thermal noise, per-trial samples
    int qam_order = 4;
    int data_slots = 48;  // OQAM half-symbol slots of payload
    int ofdm_cp = 16;
    int trials = 100;
    std::uint64_t seed = 1;
    SweepSpec sweep;
    FseSpec fse;
    ChannelSpec channel;
    CellFreeSpec cellfree;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Field-level validation messages; empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct MetricRow {
    std::string scenario;
    std::string waveform;
    std::string sweep_param;
    double sweep_value = 0.0;
    int user = 0;
    std::string metric;
    double value = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    std::vector<MetricRow> rows;
};

// Deterministic given (config, seed) for any thread count; trials run on a
// worker pool and merge in trial order.
ExperimentResult run_experiment(const ExperimentConfig& config, int num_threads = 1);

void write_csv(const ExperimentResult& result, std::ostream& out);

// Convenience filters for consumers of the row stream.
std::vector<double> select_values(const ExperimentResult& result, const std::string& waveform,
                                  double sweep_value, int user, const std::string& metric);
double mean_metric(const ExperimentResult& result, const std::string& waveform, double sweep_value,
                   const std::string& metric);

}  // namespace fbmcsim
