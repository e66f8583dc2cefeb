#include "fbmcsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "fbmcsim/cellfree.hpp"
#include "fbmcsim/channel.hpp"
#include "fbmcsim/chanest.hpp"
#include "fbmcsim/equalizer.hpp"
#include "fbmcsim/metrics.hpp"
#include "fbmcsim/modem.hpp"
#include "fbmcsim/ofdm.hpp"
#include "fbmcsim/prototype.hpp"
#include "fbmcsim/qam.hpp"
#include "fbmcsim/rng.hpp"

namespace fbmcsim {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------- config --

template <typename T>
void read_field(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).template get<T>();
}

void read_sweep(const json& j, SweepSpec& sweep) {
    if (!j.contains("sweep")) return;
    const json& s = j.at("sweep");
    read_field(s, "parameter", sweep.parameter);
    read_field(s, "values", sweep.values);
}

void read_fse(const json& j, FseSpec& fse) {
    if (!j.contains("fse")) return;
    const json& s = j.at("fse");
    read_field(s, "lengths", fse.lengths);
    read_field(s, "design", fse.design);
    read_field(s, "references", fse.references);
}

void read_channel(const json& j, ChannelSpec& ch) {
    if (!j.contains("channel")) return;
    const json& s = j.at("channel");
    read_field(s, "rms_delay_ns", ch.rms_delay_ns);
    read_field(s, "sample_rate_hz", ch.sample_rate_hz);
    read_field(s, "threshold_db", ch.threshold_db);
    read_field(s, "max_taps", ch.max_taps);
    read_field(s, "table_file", ch.table_file);
}

void read_cellfree(const json& j, CellFreeSpec& cf) {
    if (!j.contains("cellfree")) return;
    const json& s = j.at("cellfree");
    read_field(s, "num_aps", cf.num_aps);
    read_field(s, "antennas_per_ap", cf.antennas_per_ap);
    read_field(s, "area_km", cf.area_km);
    read_field(s, "nu", cf.nu);
    read_field(s, "bandwidth_hz", cf.bandwidth_hz);
    read_field(s, "noise_figure_db", cf.noise_figure_db);
    read_field(s, "p_max_watt", cf.p_max_watt);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text);
    ExperimentConfig c;
    read_field(j, "name", c.name);
    read_field(j, "scenario", c.scenario);
    read_field(j, "waveform", c.waveform);
    read_field(j, "num_users", c.num_users);
    read_field(j, "num_subcarriers", c.num_subcarriers);
    read_field(j, "overlap", c.overlap);
    read_field(j, "num_antennas", c.num_antennas);
    read_field(j, "snr_db", c.snr_db);
    read_field(j, "combiner", c.combiner);
    read_field(j, "csi", c.csi);
    read_field(j, "corrections", c.corrections);
    read_field(j, "noiseless", c.noiseless);
    read_field(j, "qam_order", c.qam_order);
    read_field(j, "data_slots", c.data_slots);
    read_field(j, "ofdm_cp", c.ofdm_cp);
    read_field(j, "trials", c.trials);
    read_field(j, "seed", c.seed);
    read_sweep(j, c.sweep);
    read_fse(j, c.fse);
    read_channel(j, c.channel);
    read_cellfree(j, c.cellfree);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> errors;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    const std::set<std::string> scenarios{"colocated", "cellfree"};
    const std::set<std::string> waveforms{"fbmc", "ofdm", "both"};
    const std::set<std::string> combiners{"mrc", "zf", "mmse"};
    const std::set<std::string> csis{"perfect", "estimated"};
    const std::set<std::string> corrections{"none", "scale", "subtract_small",
                                            "subtract_cellfree"};
    const std::set<std::string> sweeps{"none", "num_antennas", "snr_db", "num_aps", "nu"};
    const std::set<std::string> designs{"zf", "mmse"};
    const std::set<std::string> refs{"pdp", "equivalent", "approx_pdp"};

    check(scenarios.count(c.scenario) != 0, "scenario: must be colocated or cellfree");
    check(waveforms.count(c.waveform) != 0, "waveform: must be fbmc, ofdm, or both");
    check(combiners.count(c.combiner) != 0, "combiner: must be mrc, zf, or mmse");
    check(csis.count(c.csi) != 0, "csi: must be perfect or estimated");
    for (const auto& corr : c.corrections)
        check(corrections.count(corr) != 0, "corrections: unknown mode '" + corr + "'");
    check(!c.corrections.empty(), "corrections: list must be nonempty");
    check(c.num_users >= 1, "num_users: must be >= 1");
    check(c.num_subcarriers >= 2 && c.num_subcarriers % 2 == 0,
          "num_subcarriers: must be even and >= 2");
    check(c.overlap >= 2 && c.overlap <= 4, "overlap: must be in {2,3,4}");
    check(c.num_antennas >= 1, "num_antennas: must be >= 1");
    check(c.qam_order == 4 || c.qam_order == 64, "qam_order: must be 4 or 64");
    check(c.data_slots >= 20 && c.data_slots % 2 == 0, "data_slots: must be even and >= 20");
    check(c.ofdm_cp >= 0, "ofdm_cp: must be >= 0");
    check(c.trials >= 1, "trials: must be >= 1");
    check(sweeps.count(c.sweep.parameter) != 0,
          "sweep.parameter: must be none, num_antennas, snr_db, num_aps, or nu");
    if (c.sweep.parameter != "none")
        check(!c.sweep.values.empty(), "sweep.values: must be nonempty when a parameter is set");
    if (c.sweep.parameter == "num_aps" || c.sweep.parameter == "nu")
        check(c.scenario == "cellfree", "sweep.parameter: " + c.sweep.parameter +
                                            " requires scenario cellfree");
    if (c.sweep.parameter == "num_antennas" || c.sweep.parameter == "snr_db")
        check(c.scenario == "colocated", "sweep.parameter: " + c.sweep.parameter +
                                             " requires scenario colocated");
    check(designs.count(c.fse.design) != 0, "fse.design: must be zf or mmse");
    check(!c.fse.lengths.empty(), "fse.lengths: must be nonempty");
    for (int len : c.fse.lengths)
        check(len == 0 || (len > 0 && len % 2 == 1), "fse.lengths: entries must be 0 or odd");
    check(!c.fse.references.empty(), "fse.references: must be nonempty");
    for (const auto& r : c.fse.references)
        check(refs.count(r) != 0, "fse.references: unknown reference '" + r + "'");
    for (const auto& corr : c.corrections) {
        if (corr == "subtract_small")
            check(c.scenario == "colocated", "corrections: subtract_small requires colocated");
        if (corr == "subtract_cellfree")
            check(c.scenario == "cellfree", "corrections: subtract_cellfree requires cellfree");
        if (corr == "subtract_small" || corr == "subtract_cellfree")
            check(std::find(c.fse.references.begin(), c.fse.references.end(), "equivalent") !=
                      c.fse.references.end(),
                  "corrections: " + corr + " applies only to the equivalent reference");
    }
    check(c.channel.rms_delay_ns > 0, "channel.rms_delay_ns: must be > 0");
    check(c.channel.sample_rate_hz > 0, "channel.sample_rate_hz: must be > 0");
    check(c.channel.max_taps >= 1, "channel.max_taps: must be >= 1");
    if (c.csi == "estimated")
        check(c.num_users * c.channel.max_taps <= c.num_subcarriers,
              "channel.max_taps: K*L exceeds pilot capacity M for estimated csi");
    if (c.scenario == "cellfree") {
        const int side =
            static_cast<int>(std::lround(std::sqrt(static_cast<double>(c.cellfree.num_aps))));
        check(side * side == c.cellfree.num_aps, "cellfree.num_aps: must be a perfect square");
        if (c.sweep.parameter == "num_aps") {
            for (double v : c.sweep.values) {
                const int aps = static_cast<int>(std::lround(v));
                const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(aps))));
                check(s * s == aps, "sweep.values: num_aps entries must be perfect squares");
            }
        }
        check(c.cellfree.antennas_per_ap >= 1, "cellfree.antennas_per_ap: must be >= 1");
        check(c.cellfree.area_km > 0, "cellfree.area_km: must be > 0");
        check(c.cellfree.p_max_watt > 0, "cellfree.p_max_watt: must be > 0");
    }
    return errors;
}

// ---------------------------------------------------------------- runner --

namespace {

constexpr int kSkipFront = 8;
constexpr int kSkipBack = 8;

// Substream purposes; sweep-dependent draws shift by 4096 * sweep index.
constexpr std::uint64_t kSubChan = 1;
constexpr std::uint64_t kSubNoise = 2;
constexpr std::uint64_t kSubData = 3;
constexpr std::uint64_t kSubOfdmNoise = 4;
constexpr std::uint64_t kSubOfdmData = 5;
constexpr std::uint64_t kSubLayout = 6;

std::uint64_t sub(std::uint64_t purpose, int sweep_idx) {
    return purpose + 4096ull * static_cast<std::uint64_t>(sweep_idx);
}

struct Variant {
    int lfse = 0;
    std::string ref;
    std::string corr;

    std::string tag(const std::string& base) const {
        if (lfse == 0) return base + ":lfse=0";
        return base + ":lfse=" + std::to_string(lfse) + ":ref=" + ref + ":corr=" + corr;
    }
};

CorrectionMode parse_correction(const std::string& name) {
    if (name == "scale") return CorrectionMode::ColocatedScale;
    if (name == "subtract_small") return CorrectionMode::SubtractTermSmall;
    if (name == "subtract_cellfree") return CorrectionMode::SubtractTermCellfree;
    return CorrectionMode::None;
}

struct CellStats {
    SinrAccumulator sinr;
    BerCounter ber;
    double nmse_num = 0.0;
    double nmse_den = 0.0;

    void merge(const CellStats& other) {
        sinr.merge(other.sinr);
        ber.merge(other.ber);
        nmse_num += other.nmse_num;
        nmse_den += other.nmse_den;
    }
};

struct TrialOutput {
    std::vector<CellStats> fbmc;  // [sweep][variant][user]
    std::vector<CellStats> ofdm;  // [sweep][user]
};

struct RunContext {
    ExperimentConfig cfg;
    PrototypeFilter filter;
    PdpProfile pdp;
    int L = 0;
    CompositePulse target;
    QamConstellation qam;
    bool estimated = false;
    bool run_fbmc = false;
    bool run_ofdm = false;
    bool cellfree = false;
    PilotPlan plan;
    EstimationModel model;  // assembled at unit noise; scale MSE by sigma^2
    std::vector<Variant> variants;
    std::vector<double> sweep_values;

    int n_sweep() const { return static_cast<int>(sweep_values.size()); }
    std::size_t fbmc_cell(int s, int v, int k) const {
        return (static_cast<std::size_t>(s) * variants.size() + v) * cfg.num_users + k;
    }
    std::size_t ofdm_cell(int s, int k) const {
        return static_cast<std::size_t>(s) * cfg.num_users + k;
    }
};

RunContext make_context(const ExperimentConfig& cfg) {
    RunContext ctx;
    ctx.cfg = cfg;
    ctx.filter = design_phydyas(cfg.num_subcarriers, cfg.overlap);
    PdpProfile pdp;
    if (!cfg.channel.table_file.empty())
        pdp = tdl_pdp(load_tdl_table(cfg.channel.table_file), cfg.channel.rms_delay_ns * 1e-9,
                      cfg.channel.sample_rate_hz, cfg.channel.threshold_db);
    else
        pdp = tdlc_pdp(cfg.channel.rms_delay_ns * 1e-9, cfg.channel.sample_rate_hz,
                       cfg.channel.threshold_db);
    if (pdp.length() > cfg.channel.max_taps) {
        pdp.taps.resize(static_cast<std::size_t>(cfg.channel.max_taps));
        pdp.normalize();
    }
    ctx.pdp = pdp;
    ctx.L = pdp.length();
    ctx.target = ideal_composite_target(ctx.filter);
    ctx.qam = make_qam(cfg.qam_order);
    ctx.estimated = cfg.csi == "estimated";
    ctx.run_fbmc = cfg.waveform != "ofdm";
    ctx.run_ofdm = cfg.waveform != "fbmc";
    ctx.cellfree = cfg.scenario == "cellfree";
    if (ctx.estimated) {
        ctx.plan = build_pilot_plan(cfg.num_users, ctx.L, cfg.num_subcarriers, kDefaultPilotSeed,
                                    cfg.overlap - 1);
        ctx.model = assemble_model(ctx.plan, ctx.filter, 1.0);
    }
    for (int len : cfg.fse.lengths) {
        if (len == 0) {
            ctx.variants.push_back({0, "", ""});
            continue;
        }
        for (const auto& ref : cfg.fse.references) {
            for (const auto& corr : cfg.corrections) {
                // Subtract-style corrections act on equivalent-channel taps only.
                if ((corr == "subtract_small" || corr == "subtract_cellfree") &&
                    ref != "equivalent")
                    continue;
                ctx.variants.push_back({len, ref, corr});
            }
        }
    }
    if (cfg.sweep.parameter == "none")
        ctx.sweep_values = {0.0};
    else
        ctx.sweep_values = cfg.sweep.values;
    return ctx;
}

CombinerKind parse_combiner(const std::string& name) {
    if (name == "mrc") return CombinerKind::Mrc;
    if (name == "mmse") return CombinerKind::Mmse;
    return CombinerKind::Zf;
}

DemodGrid analyze_all(const std::vector<std::vector<cd>>& rx, const PrototypeFilter& filter,
                      int num_slots) {
    DemodGrid grid(static_cast<int>(rx.size()), filter.num_subcarriers, num_slots);
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const DemodGrid one = analyze(rx[i], filter, num_slots);
        std::copy(one.samples.begin(), one.samples.end(),
                  grid.samples.begin() + static_cast<std::ptrdiff_t>(i * one.samples.size()));
    }
    return grid;
}

std::vector<std::vector<cd>> draw_noise(int num_antennas, std::size_t length, Philox& rng) {
    std::vector<std::vector<cd>> noise(static_cast<std::size_t>(num_antennas));
    for (auto& v : noise) {
        v.resize(length);
        for (auto& x : v) x = rng.cgaussian();
    }
    return noise;
}

ChannelRealization prefix_realization(const ChannelRealization& full, int num_antennas) {
    ChannelRealization out;
    out.num_antennas = num_antennas;
    out.num_users = full.num_users;
    out.length = full.length;
    out.taps.assign(full.taps.begin(),
                    full.taps.begin() + static_cast<std::ptrdiff_t>(
                                            static_cast<std::size_t>(num_antennas) *
                                            full.num_users * full.length));
    return out;
}

void scale_users(ChannelRealization& realization, const std::vector<double>& mu) {
    for (int i = 0; i < realization.num_antennas; ++i)
        for (int k = 0; k < realization.num_users; ++k) {
            const double a = std::sqrt(mu[static_cast<std::size_t>(k)]);
            for (int l = 0; l < realization.length; ++l) realization.at(i, k, l) *= a;
        }
}

ChannelRealization estimate_all(const RunContext& ctx, const DemodGrid& grid_c,
                                const DemodGrid& grid_n, double sigma, int num_antennas) {
    const int K = ctx.cfg.num_users;
    const int L = ctx.L;
    ChannelRealization est;
    est.num_antennas = num_antennas;
    est.num_users = K;
    est.length = L;
    est.taps.resize(static_cast<std::size_t>(num_antennas) * K * L);
    for (int i = 0; i < num_antennas; ++i) {
        Eigen::VectorXcd zbar = extract_pilot_samples(grid_c, ctx.plan, i);
        if (sigma > 0.0) zbar += sigma * extract_pilot_samples(grid_n, ctx.plan, i);
        const Eigen::VectorXcd h = estimate_channels(ctx.model, zbar);
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l) est.at(i, k, l) = h(k * L + l);
    }
    return est;
}

// Peak-normalize so the MMSE ridge level is expressed relative to a
// unit-gain pulse; returns false on a degenerate (near-zero) pulse.
bool normalize_peak(CompositePulse& pulse, double& scale2) {
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < pulse.taps.size(); ++i) {
        const double m = std::abs(pulse.taps[i]);
        if (m > best_mag) {
            best_mag = m;
            best = i;
        }
    }
    if (best_mag < 1e-12) return false;
    const cd peak = pulse.taps[best];
    for (auto& t : pulse.taps) t /= peak;
    scale2 = std::norm(peak);
    return true;
}

struct SweepPointInput {
    const ChannelRealization* truth;  // effective channel, num_antennas entries
    const DemodGrid* grid_c = nullptr;
    const DemodGrid* grid_n = nullptr;
    const std::vector<std::vector<cd>>* ofdm_c = nullptr;
    const std::vector<std::vector<cd>>* ofdm_n = nullptr;
    double sigma2 = 0.0;
    int num_antennas = 0;
    int data_start = 0;
    CorrectionContext corr_ctx;
};

// One FBMC+OFDM evaluation at a fixed sweep point; fills the trial cells.
void process_point(const RunContext& ctx, int sweep_idx, const SymbolFrame& frame,
                   const std::vector<std::uint32_t>& labels, const OfdmFrame& oframe,
                   const std::vector<std::uint32_t>& olabels, const SweepPointInput& in,
                   TrialOutput& out) {
    const ExperimentConfig& cfg = ctx.cfg;
    const int K = cfg.num_users;
    const int M = cfg.num_subcarriers;
    const int N = in.num_antennas;
    const double sigma = std::sqrt(in.sigma2);

    // CSI: genie taps or MVU estimates from the pilot slot.
    ChannelRealization csi;
    double sigma_et2 = 0.0;
    double sigma_ef2 = 0.0;
    if (ctx.estimated) {
        csi = estimate_all(ctx, *in.grid_c, *in.grid_n, sigma, N);
        sigma_et2 = in.sigma2 * ctx.model.mse_total / static_cast<double>(K * ctx.L);
        sigma_ef2 = static_cast<double>(ctx.L) * sigma_et2;
    } else {
        csi = *in.truth;
    }

    const auto gains = subcarrier_gains(csi, M);
    const CombinerBank bank = build_combiner(gains, parse_combiner(cfg.combiner), in.sigma2);

    // ---- OFDM arm: combining only. ----
    if (ctx.run_ofdm) {
        const OfdmConfig ocfg{M, cfg.ofdm_cp};
        UserStreams oy = ofdm_detect(*in.ofdm_c, ocfg, bank, ctx.L);
        if (sigma > 0.0) {
            const UserStreams on = ofdm_detect(*in.ofdm_n, ocfg, bank, ctx.L);
            for (std::size_t i = 0; i < oy.data.size(); ++i) oy.data[i] += sigma * on.data[i];
        }
        const int n_sym = oframe.num_symbols;
        for (int k = 0; k < K; ++k) {
            CellStats& cell = out.ofdm[ctx.ofdm_cell(sweep_idx, k)];
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < n_sym; ++n) {
                    const cd shat = oy.at(k, m, n);
                    const cd s = oframe.at(k, m, n);
                    cell.sinr.add(shat.real(), s.real());
                    cell.sinr.add(shat.imag(), s.imag());
                }
            if (!cfg.noiseless) {
                // Per-trial regression gain, then hard decisions.
                double cross = 0.0;
                double ref = 0.0;
                for (int m = 0; m < M; ++m)
                    for (int n = 0; n < n_sym; ++n) {
                        const cd shat = oy.at(k, m, n);
                        const cd s = oframe.at(k, m, n);
                        cross += shat.real() * s.real() + shat.imag() * s.imag();
                        ref += std::norm(s);
                    }
                const double a = ref > 0.0 ? cross / ref : 1.0;
                if (a != 0.0) {
                    for (int m = 0; m < M; ++m)
                        for (int n = 0; n < n_sym; ++n) {
                            const cd shat = oy.at(k, m, n) / a;
                            const std::size_t base =
                                ((static_cast<std::size_t>(k) * M + m) * n_sym + n) * 2;
                            cell.ber.bit_errors += label_bit_errors(
                                ctx.qam, olabels[base], pam_demap(ctx.qam, shat.real()));
                            cell.ber.bit_errors += label_bit_errors(
                                ctx.qam, olabels[base + 1], pam_demap(ctx.qam, shat.imag()));
                            cell.ber.bits += 2 * ctx.qam.bits_per_axis;
                        }
                }
            }
        }
    }

    if (!ctx.run_fbmc) return;

    // ---- FBMC arm: combining + fractionally spaced equalization. ----
    UserStreams y = combine_stream(*in.grid_c, bank);
    if (sigma > 0.0) {
        const UserStreams yn = combine_stream(*in.grid_n, bank);
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += sigma * yn.data[i];
    }

    if (ctx.estimated) {
        for (int k = 0; k < K; ++k) {
            CellStats& cell = out.fbmc[ctx.fbmc_cell(sweep_idx, 0, k)];
            for (int i = 0; i < N; ++i)
                for (int l = 0; l < ctx.L; ++l) {
                    cell.nmse_num += std::norm(csi.at(i, k, l) - in.truth->at(i, k, l));
                    cell.nmse_den += std::norm(in.truth->at(i, k, l));
                }
        }
    }

    // Equivalent channel from the CSI in use, shared across variants.
    bool need_equivalent = false;
    for (const auto& var : ctx.variants)
        if (var.lfse > 0 && var.ref == "equivalent") need_equivalent = true;
    EquivalentChannel eq;
    if (need_equivalent)
        eq = equivalent_channel(bank, csi, std::vector<double>(static_cast<std::size_t>(K), 1.0));

    const int d0 = in.data_start;
    const int n_data = cfg.data_slots;
    const ErrorStatsView base_stats{sigma_et2, sigma_ef2, CorrectionMode::None};

    // Mean combiner-noise amplification per user, for the PDP-design ridge.
    std::vector<double> mean_wnorm2(static_cast<std::size_t>(K), 0.0);
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k)
            mean_wnorm2[static_cast<std::size_t>(k)] +=
                bank.weights[static_cast<std::size_t>(m)].col(k).squaredNorm() / M;

    const FseDesignKind design_kind =
        cfg.fse.design == "zf" ? FseDesignKind::ZfLs : FseDesignKind::Mmse;

    std::vector<double> shat_buf;
    for (std::size_t v = 0; v < ctx.variants.size(); ++v) {
        const Variant& var = ctx.variants[v];
        ErrorStatsView stats = base_stats;
        stats.mode = parse_correction(var.corr);

        EquivalentChannel eq_var;
        if (var.lfse > 0 && var.ref == "equivalent") {
            eq_var = (stats.mode == CorrectionMode::SubtractTermSmall ||
                      stats.mode == CorrectionMode::SubtractTermCellfree)
                         ? apply_csi_correction(eq, stats, in.corr_ctx)
                         : eq;
        }

        for (int k = 0; k < K; ++k) {
            CellStats& cell = out.fbmc[ctx.fbmc_cell(sweep_idx, static_cast<int>(v), k)];

            // Per-user FSE for PDP references (m-independent design).
            FseTaps user_fse;
            bool user_fse_ok = false;
            if (var.lfse > 0 && var.ref != "equivalent") {
                PdpProfile ref_pdp = var.ref == "pdp" ? ctx.pdp : approximate_pdp(csi, k);
                if (stats.mode == CorrectionMode::ColocatedScale)
                    ref_pdp = apply_csi_correction(ref_pdp, stats);
                CompositePulse pulse = composite_pulse_pdp(ref_pdp, ctx.filter);
                double scale2 = 1.0;
                if (normalize_peak(pulse, scale2)) {
                    const double noise_level =
                        design_kind == FseDesignKind::Mmse
                            ? in.sigma2 * mean_wnorm2[static_cast<std::size_t>(k)] / scale2
                            : 0.0;
                    user_fse = design_fse(pulse, ctx.target, var.lfse, design_kind, noise_level);
                    user_fse_ok = true;
                }
            }

            for (int m = 0; m < M; ++m) {
                const double* shat = nullptr;
                if (var.lfse == 0) {
                    shat_buf.resize(static_cast<std::size_t>(y.num_slots));
                    for (int n = 0; n < y.num_slots; ++n)
                        shat_buf[static_cast<std::size_t>(n)] = y.at(k, m, n).real();
                    shat = shat_buf.data();
                } else if (var.ref == "equivalent") {
                    CompositePulse pulse =
                        composite_pulse_subcarrier(eq_var, k, m, ctx.filter);
                    double scale2 = 1.0;
                    if (normalize_peak(pulse, scale2)) {
                        const double wnorm2 =
                            bank.weights[static_cast<std::size_t>(m)].col(k).squaredNorm();
                        const double noise_level = design_kind == FseDesignKind::Mmse
                                                       ? in.sigma2 * wnorm2 / scale2
                                                       : 0.0;
                        const FseTaps fse =
                            design_fse(pulse, ctx.target, var.lfse, design_kind, noise_level);
                        shat_buf = equalize_stream(y, k, m, fse);
                    } else {
                        shat_buf.resize(static_cast<std::size_t>(y.num_slots));
                        for (int n = 0; n < y.num_slots; ++n)
                            shat_buf[static_cast<std::size_t>(n)] = y.at(k, m, n).real();
                    }
                    shat = shat_buf.data();
                } else {
                    if (user_fse_ok) {
                        shat_buf = equalize_stream(y, k, m, user_fse);
                    } else {
                        shat_buf.resize(static_cast<std::size_t>(y.num_slots));
                        for (int n = 0; n < y.num_slots; ++n)
                            shat_buf[static_cast<std::size_t>(n)] = y.at(k, m, n).real();
                    }
                    shat = shat_buf.data();
                }

                for (int d = kSkipFront; d < n_data - kSkipBack; ++d)
                    cell.sinr.add(shat[d0 + d], frame.at(k, m, d0 + d));

                if (!cfg.noiseless) {
                    double cross = 0.0;
                    double ref = 0.0;
                    for (int d = kSkipFront; d < n_data - kSkipBack; ++d) {
                        cross += shat[d0 + d] * frame.at(k, m, d0 + d);
                        ref += frame.at(k, m, d0 + d) * frame.at(k, m, d0 + d);
                    }
                    const double a = ref > 0.0 ? cross / ref : 1.0;
                    if (a != 0.0) {
                        for (int t = (kSkipFront + 1) / 2; 2 * t + 1 < n_data - kSkipBack; ++t) {
                            const std::size_t base =
                                ((static_cast<std::size_t>(k) * M + m) * (n_data / 2) + t) * 2;
                            cell.ber.bit_errors += label_bit_errors(
                                ctx.qam, labels[base],
                                pam_demap(ctx.qam, shat[d0 + 2 * t] / a));
                            cell.ber.bit_errors += label_bit_errors(
                                ctx.qam, labels[base + 1],
                                pam_demap(ctx.qam, shat[d0 + 2 * t + 1] / a));
                            cell.ber.bits += 2 * ctx.qam.bits_per_axis;
                        }
                    }
                }
            }
        }
    }
}

TrialOutput run_trial(const RunContext& ctx, int trial) {
    const ExperimentConfig& cfg = ctx.cfg;
    const int K = cfg.num_users;
    const int M = cfg.num_subcarriers;
    const std::uint64_t seed = cfg.seed;

    TrialOutput out;
    out.fbmc.resize(static_cast<std::size_t>(ctx.n_sweep()) * ctx.variants.size() * K);
    out.ofdm.resize(static_cast<std::size_t>(ctx.n_sweep()) * K);

    // Data: Gray axis labels drawn once per trial, shared across sweep points.
    const int n_pairs = cfg.data_slots / 2;
    std::vector<std::uint32_t> labels(static_cast<std::size_t>(K) * M * n_pairs * 2);
    {
        Philox data_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubData, 0));
        const std::uint32_t mask = (1u << ctx.qam.bits_per_axis) - 1u;
        for (auto& l : labels) l = data_rng() & mask;
    }
    const int n_ofdm_sym = n_pairs;
    std::vector<std::uint32_t> olabels;
    if (ctx.run_ofdm) {
        olabels.resize(static_cast<std::size_t>(K) * M * n_ofdm_sym * 2);
        Philox odata_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubOfdmData, 0));
        const std::uint32_t mask = (1u << ctx.qam.bits_per_axis) - 1u;
        for (auto& l : olabels) l = odata_rng() & mask;
    }

    const int data_start = ctx.estimated ? 1 + ctx.plan.guard_slots : 0;
    const int n_slots = data_start + cfg.data_slots;

    // OQAM frame: real axis on even payload slots, imaginary on odd.
    SymbolFrame frame(K, M, n_slots);
    if (ctx.estimated)
        for (int k = 0; k < K; ++k) {
            const auto& subs = ctx.plan.subcarriers[static_cast<std::size_t>(k)];
            const auto& vals = ctx.plan.values[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < subs.size(); ++i)
                frame.at(k, subs[i], ctx.plan.pilot_slot) = vals[i];
        }
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < M; ++m)
            for (int t = 0; t < n_pairs; ++t) {
                const std::size_t base =
                    ((static_cast<std::size_t>(k) * M + m) * n_pairs + t) * 2;
                frame.at(k, m, data_start + 2 * t) = pam_map(ctx.qam, labels[base]);
                frame.at(k, m, data_start + 2 * t + 1) = pam_map(ctx.qam, labels[base + 1]);
            }

    OfdmFrame oframe;
    if (ctx.run_ofdm) {
        oframe = OfdmFrame(K, M, n_ofdm_sym);
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < n_ofdm_sym; ++n) {
                    const std::size_t base =
                        ((static_cast<std::size_t>(k) * M + m) * n_ofdm_sym + n) * 2;
                    oframe.at(k, m, n) =
                        qam_map(ctx.qam, olabels[base], olabels[base + 1]);
                }
    }

    const std::vector<PdpProfile> pdps(static_cast<std::size_t>(K), ctx.pdp);
    const OfdmConfig ocfg{M, cfg.ofdm_cp};

    if (!ctx.cellfree) {
        int n_max = cfg.num_antennas;
        if (cfg.sweep.parameter == "num_antennas")
            for (double v : ctx.sweep_values)
                n_max = std::max(n_max, static_cast<int>(std::lround(v)));

        Philox chan_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubChan, 0));
        const ChannelRealization realization = draw_realization(pdps, n_max, chan_rng);

        const auto tx = synthesize(frame, ctx.filter);
        Philox unused(seed, static_cast<std::uint64_t>(trial), 0);
        const auto clean = apply_channel_awgn(tx, realization, 0.0, unused);
        Philox noise_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubNoise, 0));
        const auto noise = draw_noise(n_max, clean.front().size(), noise_rng);
        const DemodGrid grid_c = analyze_all(clean, ctx.filter, n_slots);
        const DemodGrid grid_n = analyze_all(noise, ctx.filter, n_slots);

        std::vector<std::vector<cd>> oclean, onoise;
        if (ctx.run_ofdm) {
            const auto otx = ofdm_modulate(oframe, ocfg);
            oclean = apply_channel_awgn(otx, realization, 0.0, unused);
            Philox onoise_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubOfdmNoise, 0));
            onoise = draw_noise(n_max, oclean.front().size(), onoise_rng);
        }

        for (int s = 0; s < ctx.n_sweep(); ++s) {
            const int N = cfg.sweep.parameter == "num_antennas"
                              ? static_cast<int>(std::lround(ctx.sweep_values[s]))
                              : cfg.num_antennas;
            const double snr = cfg.sweep.parameter == "snr_db" ? ctx.sweep_values[s] : cfg.snr_db;
            SweepPointInput in;
            const ChannelRealization truth = prefix_realization(realization, N);
            in.truth = &truth;
            in.grid_c = &grid_c;
            in.grid_n = &grid_n;
            in.ofdm_c = &oclean;
            in.ofdm_n = &onoise;
            in.sigma2 = cfg.noiseless ? 0.0 : std::pow(10.0, -snr / 10.0);
            in.num_antennas = N;
            in.data_start = data_start;
            in.corr_ctx.num_antennas = N;
            in.corr_ctx.power_coeffs.assign(static_cast<std::size_t>(K), 1.0);
            in.corr_ctx.sum_beta_per_user.assign(static_cast<std::size_t>(K), 1.0);
            process_point(ctx, s, frame, labels, oframe, olabels, in, out);
        }
        return out;
    }

    // Cell-free: per-trial layout(s); nu sweeps share the layout and fading.
    const bool aps_sweep = cfg.sweep.parameter == "num_aps";
    CellFreeLayout layout;
    ChannelRealization small_scale;
    for (int s = 0; s < ctx.n_sweep(); ++s) {
        const int layout_idx = aps_sweep ? s : 0;
        if (s == 0 || aps_sweep) {
            const int num_aps = aps_sweep ? static_cast<int>(std::lround(ctx.sweep_values[s]))
                                          : cfg.cellfree.num_aps;
            Philox layout_rng(seed, static_cast<std::uint64_t>(trial),
                              sub(kSubLayout, layout_idx));
            layout = build_layout(num_aps, cfg.cellfree.antennas_per_ap, K,
                                  cfg.cellfree.area_km, layout_rng);
            Philox chan_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubChan, layout_idx));
            small_scale = draw_realization_scaled(pdps, layout.beta_per_antenna_user(),
                                                  layout.num_antennas(), chan_rng);
        }
        const double nu = cfg.sweep.parameter == "nu" ? ctx.sweep_values[s] : cfg.cellfree.nu;
        const PowerControl control =
            fractional_power_control(layout.sum_beta_per_user(), nu, cfg.cellfree.p_max_watt);

        ChannelRealization eff = small_scale;
        scale_users(eff, control.mu);

        SymbolFrame tx_frame = frame;
        tx_frame.power_coeffs = control.mu;
        const auto tx = synthesize(tx_frame, ctx.filter);
        Philox unused(seed, static_cast<std::uint64_t>(trial), 0);
        // Channel draw already carries sqrt(mu*beta) through eff? No: the
        // transmit scaling carries sqrt(mu), the fading draw carries
        // sqrt(beta); convolve with the unscaled small-scale taps.
        const auto clean = apply_channel_awgn(tx, small_scale, 0.0, unused);
        const double sigma2 =
            cfg.noiseless ? 0.0
                          : noise_power(290.0, 1.380649e-23, cfg.cellfree.bandwidth_hz,
                                        cfg.cellfree.noise_figure_db);
        Philox noise_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubNoise, s));
        const auto noise = draw_noise(layout.num_antennas(), clean.front().size(), noise_rng);
        const DemodGrid grid_c = analyze_all(clean, ctx.filter, n_slots);
        const DemodGrid grid_n = analyze_all(noise, ctx.filter, n_slots);

        std::vector<std::vector<cd>> oclean, onoise;
        OfdmFrame otx_frame = oframe;
        if (ctx.run_ofdm) {
            otx_frame.power_coeffs = control.mu;
            const auto otx = ofdm_modulate(otx_frame, ocfg);
            oclean = apply_channel_awgn(otx, small_scale, 0.0, unused);
            Philox onoise_rng(seed, static_cast<std::uint64_t>(trial), sub(kSubOfdmNoise, s));
            onoise = draw_noise(layout.num_antennas(), oclean.front().size(), onoise_rng);
        }

        SweepPointInput in;
        in.truth = &eff;
        in.grid_c = &grid_c;
        in.grid_n = &grid_n;
        in.ofdm_c = &oclean;
        in.ofdm_n = &onoise;
        in.sigma2 = sigma2;
        in.num_antennas = layout.num_antennas();
        in.data_start = data_start;
        in.corr_ctx.num_antennas = layout.num_antennas();
        in.corr_ctx.power_coeffs = control.mu;
        in.corr_ctx.sum_beta_per_user = layout.sum_beta_per_user();
        process_point(ctx, s, frame, labels, oframe, olabels, in, out);
    }
    return out;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int num_threads) {
    {
        const auto errors = validate_config(config);
        if (!errors.empty()) {
            std::string msg = "invalid config:";
            for (const auto& e : errors) msg += "\n  " + e;
            throw std::invalid_argument(msg);
        }
    }
    const RunContext ctx = make_context(config);
    const int trials = config.trials;

    std::vector<TrialOutput> outputs(static_cast<std::size_t>(trials));
    const int workers = std::max(1, std::min(num_threads, trials));
    if (workers == 1) {
        for (int t = 0; t < trials; ++t) outputs[static_cast<std::size_t>(t)] = run_trial(ctx, t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const int t = next.fetch_add(1);
                    if (t >= trials) break;
                    outputs[static_cast<std::size_t>(t)] = run_trial(ctx, t);
                }
            });
        for (auto& th : pool) th.join();
    }

    // Deterministic trial-ordered reduction.
    const int K = config.num_users;
    std::vector<CellStats> fbmc_pool(static_cast<std::size_t>(ctx.n_sweep()) *
                                     ctx.variants.size() * K);
    std::vector<CellStats> ofdm_pool(static_cast<std::size_t>(ctx.n_sweep()) * K);
    for (const auto& o : outputs) {
        for (std::size_t i = 0; i < fbmc_pool.size(); ++i) fbmc_pool[i].merge(o.fbmc[i]);
        for (std::size_t i = 0; i < ofdm_pool.size(); ++i) ofdm_pool[i].merge(o.ofdm[i]);
    }

    ExperimentResult result;
    auto push = [&](const std::string& waveform, double sweep_value, int user,
                    const std::string& metric, double value) {
        MetricRow row;
        row.scenario = config.name;
        row.waveform = waveform;
        row.sweep_param = config.sweep.parameter;
        row.sweep_value = sweep_value;
        row.user = user;
        row.metric = metric;
        row.value = value;
        row.trials = trials;
        row.seed = config.seed;
        result.rows.push_back(std::move(row));
    };

    for (int s = 0; s < ctx.n_sweep(); ++s) {
        const double sv = ctx.sweep_values[static_cast<std::size_t>(s)];
        if (ctx.run_fbmc) {
            for (std::size_t v = 0; v < ctx.variants.size(); ++v) {
                const Variant& var = ctx.variants[v];
                for (int k = 0; k < K; ++k) {
                    const CellStats& cell = fbmc_pool[ctx.fbmc_cell(s, static_cast<int>(v), k)];
                    push("fbmc", sv, k, var.tag("sinr_db"), cell.sinr.sinr_db());
                    if (!config.noiseless) push("fbmc", sv, k, var.tag("ber"), cell.ber.ber());
                    if (config.noiseless)
                        for (int t = 0; t < trials; ++t)
                            push("fbmc", sv, k, var.tag("sir_db"),
                                 outputs[static_cast<std::size_t>(t)]
                                     .fbmc[ctx.fbmc_cell(s, static_cast<int>(v), k)]
                                     .sinr.sinr_db());
                }
            }
            if (ctx.estimated)
                for (int k = 0; k < K; ++k) {
                    const CellStats& cell = fbmc_pool[ctx.fbmc_cell(s, 0, k)];
                    if (cell.nmse_den > 0.0)
                        push("fbmc", sv, k, "nmse", cell.nmse_num / cell.nmse_den);
                }
        }
        if (ctx.run_ofdm) {
            for (int k = 0; k < K; ++k) {
                const CellStats& cell = ofdm_pool[ctx.ofdm_cell(s, k)];
                push("ofdm", sv, k, "sinr_db", cell.sinr.sinr_db());
                if (!config.noiseless) push("ofdm", sv, k, "ber", cell.ber.ber());
                if (config.noiseless)
                    for (int t = 0; t < trials; ++t)
                        push("ofdm", sv, k, "sir_db",
                             outputs[static_cast<std::size_t>(t)]
                                 .ofdm[ctx.ofdm_cell(s, k)]
                                 .sinr.sinr_db());
            }
        }
    }
    return result;
}

void write_csv(const ExperimentResult& result, std::ostream& out) {
    out << "scenario, waveform, sweep_param, sweep_value, user, metric, value, trials, seed\n";
    for (const auto& row : result.rows)
        out << row.scenario << ',' << row.waveform << ',' << row.sweep_param << ','
            << format_value(row.sweep_value) << ',' << row.user << ',' << row.metric << ','
            << format_value(row.value) << ',' << row.trials << ',' << row.seed << '\n';
}

std::vector<double> select_values(const ExperimentResult& result, const std::string& waveform,
                                  double sweep_value, int user, const std::string& metric) {
    std::vector<double> out;
    for (const auto& row : result.rows)
        if (row.waveform == waveform && row.sweep_value == sweep_value && row.user == user &&
            row.metric == metric)
            out.push_back(row.value);
    return out;
}

double mean_metric(const ExperimentResult& result, const std::string& waveform, double sweep_value,
                   const std::string& metric) {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : result.rows)
        if (row.waveform == waveform && row.sweep_value == sweep_value && row.metric == metric) {
            sum += row.value;
            ++count;
        }
    if (count == 0) throw std::invalid_argument("mean_metric: no matching rows");
    return sum / count;
}

}  // namespace fbmcsim
