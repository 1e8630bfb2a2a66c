#pragma once

// Command-line driver: compress, corrupt, recover, detect-patch, verify, bench.
// Every subcommand resolves its configuration as built-in defaults < JSON config file < flags,
// and echoes the resolved configuration into each artifact it writes.

#include "l0robust/analysis.hpp"
#include "l0robust/core.hpp"
#include "l0robust/corruption.hpp"
#include "l0robust/imageio.hpp"
#include "l0robust/patchwise.hpp"
#include "l0robust/recovery.hpp"
#include "l0robust/sparsity.hpp"
#include "l0robust/transforms.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace l0robust::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 1;
inline constexpr int kExitInternal = 2;

enum class ParamType { String, UInt, Int, Double, Bool };

struct Param {
    std::string key;  // config key; the flag is --key with '_' spelled '-'
    ParamType type;
    json default_value;
    std::string help;
};

class Context {
  public:
    Context(json config, std::size_t threads, std::filesystem::path output_dir, std::ostream &out)
        : config_(std::move(config)), threads_(threads), output_dir_(std::move(output_dir)), out_(out) {}

    [[nodiscard]] const json &config() const { return config_; }
    [[nodiscard]] std::size_t threads() const { return threads_; }
    [[nodiscard]] std::ostream &out() const { return out_; }

    template <typename T>
    [[nodiscard]] T get(const std::string &key) const {
        return config_.at(key).get<T>();
    }

    [[nodiscard]] std::string required_path(const std::string &key) const {
        std::string v = get<std::string>(key);
        if (v.empty()) {
            throw invalid_input("missing required parameter --" + flag_name(key));
        }
        return v;
    }

    /// Relative output paths resolve against L0ROBUST_OUTPUT_DIR when it is set.
    [[nodiscard]] std::filesystem::path output_path(const std::string &key) const {
        const std::filesystem::path p(get<std::string>(key));
        if (p.empty() || p.is_absolute() || output_dir_.empty()) {
            return p;
        }
        return output_dir_ / p;
    }

    static std::string flag_name(std::string key) {
        std::replace(key.begin(), key.end(), '_', '-');
        return key;
    }

  private:
    json config_;
    std::size_t threads_;
    std::filesystem::path output_dir_;
    std::ostream &out_;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Param> params;
    std::function<void(const Context &)> run;
};

namespace detail {

/// JSON has no infinities; +inf is written as the string "inf".
inline json number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? json("inf") : json("-inf");
    }
    if (std::isnan(v)) {
        return json("nan");
    }
    return json(v);
}

inline json convert_flag(const Param &p, const std::string &raw) {
    std::size_t used = 0;
    try {
        switch (p.type) {
            case ParamType::String: return json(raw);
            case ParamType::Bool: return json(true);
            case ParamType::UInt: {
                if (raw.empty() || raw[0] == '-' || raw[0] == '+') {
                    break;
                }
                const unsigned long long v = std::stoull(raw, &used);
                if (used == raw.size()) {
                    return json(static_cast<std::uint64_t>(v));
                }
                break;
            }
            case ParamType::Int: {
                const long long v = std::stoll(raw, &used);
                if (used == raw.size()) {
                    return json(static_cast<std::int64_t>(v));
                }
                break;
            }
            case ParamType::Double: {
                const double v = std::stod(raw, &used);
                if (used == raw.size() && std::isfinite(v)) {
                    return json(v);
                }
                break;
            }
        }
    } catch (const std::logic_error &) {
    }
    static const char *const expected[] = {"a string", "a nonnegative integer", "an integer", "a finite number", "no value"};
    throw invalid_input("--" + Context::flag_name(p.key) + " expects " + expected[static_cast<int>(p.type)] + ", got '" +
                        raw + "'");
}

inline void check_type(const Param &p, const json &v) {
    bool ok = false;
    switch (p.type) {
        case ParamType::String: ok = v.is_string(); break;
        case ParamType::UInt: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); break;
        case ParamType::Int: ok = v.is_number_integer(); break;
        case ParamType::Double: ok = v.is_number(); break;
        case ParamType::Bool: ok = v.is_boolean(); break;
    }
    if (!ok) {
        throw invalid_input("config key '" + p.key + "' has the wrong type: " + v.dump());
    }
}

inline json load_config_file(const std::string &path, const std::string &command) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot read config file '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw invalid_input("config file '" + path + "' is not valid JSON: " + e.what());
    }
    // Artifacts carry their configuration under "config"; such files can be fed back directly.
    if (j.is_object() && j.contains("config") && j["config"].is_object()) {
        j = j["config"];
    }
    if (!j.is_object()) {
        throw invalid_input("config file '" + path + "' must hold a JSON object");
    }
    if (j.contains("command")) {
        if (!j["command"].is_string() || j["command"].get<std::string>() != command) {
            throw invalid_input("config file '" + path + "' is for command " + j["command"].dump() + ", not '" +
                                command + "'");
        }
        j.erase("command");
    }
    return j;
}

inline void write_json(const std::filesystem::path &path, const json &j) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw io_error("failed writing '" + path.string() + "'");
    }
}

inline void emit_json(const Context &ctx, const std::string &key, const json &j) {
    const std::filesystem::path p = ctx.output_path(key);
    if (p.empty()) {
        ctx.out() << j.dump(2) << '\n';
    } else {
        write_json(p, j);
    }
}

inline std::ofstream open_csv(const std::filesystem::path &path, const json &config) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw io_error("cannot write '" + path.string() + "'");
    }
    out << "# config: " << config.dump() << '\n';
    out << std::setprecision(17);
    return out;
}

inline void save_output_image(const ImageBuffer &img, const std::filesystem::path &path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    save_image(img, path);
}

inline TransformKind image_kind(const Context &ctx, const ImageBuffer &img) {
    TransformKind kind = TransformKind::two_d(family_from_string(ctx.get<std::string>("transform")), img.rows, img.cols);
    kind.validate();
    return kind;
}

inline json spectrum_json(const Spectrum &s) {
    json arr = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.values[i] != complex_t{}) {
            arr.push_back({{"index", i}, {"re", s.values[i].real()}, {"im", s.values[i].imag()}});
        }
    }
    return arr;
}

inline json sparse_json(const Signal &v) {
    json arr = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0) {
            arr.push_back({{"index", i}, {"value", v[i]}});
        }
    }
    return arr;
}

inline Magnitude magnitude_from(const Context &ctx) {
    Magnitude m{magnitude_kind_from_string(ctx.get<std::string>("magnitude")), ctx.get<double>("magnitude_value")};
    m.validate();
    return m;
}

inline SparsityBudget budget_from(const Context &ctx) {
    SparsityBudget b;
    b.k = ctx.get<std::size_t>("k");
    b.t = ctx.get<std::size_t>("t");
    b.max_iterations = ctx.get<std::size_t>("T");
    b.stop_tol = ctx.get<double>("stop_tol");
    return b;
}

inline IhtOptions iht_options_from(const Context &ctx) {
    IhtOptions o;
    o.order = update_order_from_string(ctx.get<std::string>("mode"));
    o.init = init_kind_from_string(ctx.get<std::string>("init")) == InitKind::Random
                 ? Init::random(ctx.get<std::uint64_t>("seed"))
                 : Init::zeros();
    o.thresholding = thresholding_from_string(ctx.get<std::string>("thresholding"));
    return o;
}

// ---- compress ----

inline void run_compress(const Context &ctx) {
    const ImageBuffer img = load_image(ctx.required_path("input"));
    const std::size_t k = ctx.get<std::size_t>("k");
    const std::size_t block = ctx.get<std::size_t>("block");
    ImageBuffer out = img;
    json report{{"config", ctx.config()}, {"k", k}, {"rows", img.rows}, {"cols", img.cols}};
    if (block == 0) {
        const TransformKind kind = image_kind(ctx, img);
        if (k == 0 || k > kind.size()) {
            throw invalid_input("compress: k must be in [1, rows*cols]");
        }
        const Transform transform(kind);
        const Thresholding mode = thresholding_from_string(ctx.get<std::string>("thresholding"));
        out.pixels = compress(img.pixels, transform, k, mode);
        const Spectrum s = transform.forward(img.pixels);
        report["tail_energy"] = l2_norm(tail(s.values, k));
    } else {
        if (family_from_string(ctx.get<std::string>("transform")) != Family::DCT2) {
            throw invalid_input("compress: block-wise mode uses the 2D DCT-II (--transform dct2)");
        }
        out = blockwise_compress(img, block, k, ctx.threads());
        Signal diff(img.size());
        for (std::size_t i = 0; i < img.size(); ++i) {
            diff[i] = img.pixels[i] - out.pixels[i];
        }
        report["tail_energy"] = l2_norm(diff);
    }
    report["psnr_vs_original"] = number(error_metrics(out.pixels, img.pixels).psnr_db);
    out.provenance = "compress";
    const auto path = ctx.output_path("output");
    if (path.empty()) {
        throw invalid_input("missing required parameter --output");
    }
    save_output_image(out, path);
    std::size_t clamped = 0;
    for (double v : out.pixels) {
        clamped += (v < 0.0 || v > 1.0) ? 1 : 0;
    }
    report["clamped_pixels"] = clamped;
    emit_json(ctx, "report", report);
}

// ---- corrupt ----

inline void run_corrupt(const Context &ctx) {
    const ImageBuffer img = load_image(ctx.required_path("input"));
    CorruptionSpec spec;
    spec.mode = corruption_mode_from_string(ctx.get<std::string>("mode"));
    spec.t = ctx.get<std::size_t>("t");
    spec.magnitude = magnitude_from(ctx);
    spec.seed = ctx.get<std::uint64_t>("seed");
    spec.patch.rows = img.rows;
    spec.patch.cols = img.cols;
    spec.patch.side = ctx.get<std::size_t>("patch_side");
    spec.patch.circular = ctx.get<bool>("circular");
    const std::int64_t ar = ctx.get<std::int64_t>("anchor_row");
    const std::int64_t ac = ctx.get<std::int64_t>("anchor_col");
    if ((ar < 0) != (ac < 0)) {
        throw invalid_input("corrupt: give both --anchor-row and --anchor-col or neither");
    }
    if (ar >= 0) {
        if (static_cast<std::size_t>(ar) + spec.patch.side > img.rows ||
            static_cast<std::size_t>(ac) + spec.patch.side > img.cols) {
            throw invalid_input("corrupt: patch anchor places the patch outside the image");
        }
        spec.patch.anchor = Anchor{static_cast<std::size_t>(ar), static_cast<std::size_t>(ac)};
    }
    const Corruption c = corrupt(img.pixels, img.rows, img.cols, spec);

    const auto path = ctx.output_path("output");
    if (path.empty()) {
        throw invalid_input("missing required parameter --output");
    }
    ImageBuffer out{img.rows, img.cols, c.y, "corrupt"};
    const SaveResult saved = [&] {
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        return save_image(out, path);
    }();
    const auto noise_path = ctx.output_path("noise_output");
    if (!noise_path.empty()) {
        ImageBuffer e_img{img.rows, img.cols, Signal(img.size()), "corrupt-noise"};
        for (std::size_t i = 0; i < img.size(); ++i) {
            e_img.pixels[i] = 0.5 + 0.5 * c.e[i];
        }
        save_output_image(e_img, noise_path);
    }
    json report{{"config", ctx.config()},
                {"spec", spec},
                {"rows", img.rows},
                {"cols", img.cols},
                {"support", c.support.indices()},
                {"noise", sparse_json(c.e)},
                {"clamped_pixels", saved.clamped},
                {"noise_image_encoding", "0.5 + e/2"}};
    emit_json(ctx, "report", report);
}

// ---- recover ----

inline void run_recover(const Context &ctx) {
    const ImageBuffer img = load_image(ctx.required_path("input"));
    const SparsityBudget budget = budget_from(ctx);
    const IhtOptions options = iht_options_from(ctx);
    const std::size_t block = ctx.get<std::size_t>("block");

    ImageBuffer out = img;
    json report{{"config", ctx.config()}, {"rows", img.rows}, {"cols", img.cols}};
    const auto trace_path = ctx.output_path("trace");
    std::vector<std::vector<double>> traces;

    if (block == 0) {
        const TransformKind kind = image_kind(ctx, img);
        const RecoveryReport r = iht(img.pixels, kind, budget, options);
        out.pixels = r.recovered_signal;
        report["iterations_run"] = r.iterations_run;
        report["residual_final"] = r.residual_trace.empty() ? 0.0 : r.residual_trace.back();
        report["discarded_imag"] = r.discarded_imag;
        report["warnings"] = r.warnings;
        report["spectrum"] = spectrum_json(r.spectrum_estimate);
        report["noise"] = sparse_json(r.noise_estimate);
        traces.push_back(r.residual_trace);
    } else {
        if (img.rows % block != 0 || img.cols % block != 0) {
            throw invalid_input("recover: --block must divide both image sides");
        }
        const TransformKind kind = TransformKind::two_d(family_from_string(ctx.get<std::string>("transform")), block, block);
        kind.validate();
        const Transform transform(kind);
        const std::size_t bcols = img.cols / block;
        const std::size_t nblocks = (img.rows / block) * bcols;
        std::vector<RecoveryReport> reports(nblocks);
        parallel_for(nblocks, ctx.threads(), [&](std::size_t b) {
            const std::size_t r0 = (b / bcols) * block;
            const std::size_t c0 = (b % bcols) * block;
            Signal y(block * block);
            for (std::size_t r = 0; r < block; ++r) {
                for (std::size_t c = 0; c < block; ++c) {
                    y[r * block + c] = img.at(r0 + r, c0 + c);
                }
            }
            reports[b] = iht(y, transform, budget, options);
        });
        json blocks = json::array();
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t r0 = (b / bcols) * block;
            const std::size_t c0 = (b % bcols) * block;
            for (std::size_t r = 0; r < block; ++r) {
                for (std::size_t c = 0; c < block; ++c) {
                    out.at(r0 + r, c0 + c) = reports[b].recovered_signal[r * block + c];
                }
            }
            blocks.push_back({{"block", b},
                              {"row", r0},
                              {"col", c0},
                              {"iterations_run", reports[b].iterations_run},
                              {"discarded_imag", reports[b].discarded_imag}});
            traces.push_back(reports[b].residual_trace);
        }
        report["warnings"] = reports.front().warnings;
        report["blocks"] = blocks;
    }

    const std::string reference = ctx.get<std::string>("reference");
    if (!reference.empty()) {
        const ImageBuffer ref = load_image(reference);
        if (ref.rows != img.rows || ref.cols != img.cols) {
            throw shape_error("recover: reference image shape differs from input");
        }
        const ErrorMetrics before = error_metrics(img.pixels, ref.pixels);
        const ErrorMetrics after = error_metrics(out.pixels, ref.pixels);
        report["psnr_corrupted"] = number(before.psnr_db);
        report["psnr_recovered"] = number(after.psnr_db);
        report["linf"] = after.linf;
        report["l2"] = after.l2;
    }

    const auto path = ctx.output_path("output");
    if (path.empty()) {
        throw invalid_input("missing required parameter --output");
    }
    out.provenance = "recover";
    save_output_image(out, path);
    if (!trace_path.empty()) {
        std::ofstream csv = open_csv(trace_path, ctx.config());
        csv << "block,iteration,residual\n";
        for (std::size_t b = 0; b < traces.size(); ++b) {
            for (std::size_t i = 0; i < traces[b].size(); ++i) {
                csv << b << ',' << (i + 1) << ',' << traces[b][i] << '\n';
            }
        }
    }
    emit_json(ctx, "report", report);
}

// ---- detect-patch ----

inline void run_detect_patch(const Context &ctx) {
    const ImageBuffer img = load_image(ctx.required_path("input"));
    const TransformKind kind = image_kind(ctx, img);
    const std::size_t side = ctx.get<std::size_t>("patch_side");
    std::size_t stride = ctx.get<std::size_t>("stride");
    if (stride == 0) {
        stride = std::max<std::size_t>(1, side / 2);
    }
    const PatchGrid grid{img.rows, img.cols, side, stride};
    PatchwiseOptions o;
    o.order = update_order_from_string(ctx.get<std::string>("mode"));
    const std::string nu = ctx.get<std::string>("noise_update");
    if (nu == "block") {
        o.noise_update = PatchNoiseUpdate::Block;
    } else if (nu == "head") {
        o.noise_update = PatchNoiseUpdate::HeadInBlock;
    } else {
        throw invalid_input("unknown --noise-update '" + nu + "' (expected block|head)");
    }
    const std::string sel = ctx.get<std::string>("selector");
    if (sel == "norm") {
        o.selector = PatchSelector::SpectrumNorm;
    } else if (sel == "residual") {
        o.selector = PatchSelector::Residual;
    } else {
        throw invalid_input("unknown --selector '" + sel + "' (expected norm|residual)");
    }
    o.t = ctx.get<std::size_t>("t");
    o.stop_tol = ctx.get<double>("stop_tol");
    o.threads = ctx.threads();
    const PatchReport r = patchwise_iht(img.pixels, kind, ctx.get<std::size_t>("k"), ctx.get<std::size_t>("T"), grid, o);

    json candidates = json::array();
    for (const CandidateScore &c : r.per_candidate) {
        candidates.push_back({{"row", c.anchor.row}, {"col", c.anchor.col}, {"norm", c.norm}, {"residual", c.residual}});
    }
    json report{{"config", ctx.config()},
                {"stride", stride},
                {"best_index", r.best_index},
                {"best_anchor", {r.best_anchor.row, r.best_anchor.col}},
                {"best_patch", r.best_patch.indices()},
                {"best_norm", r.best_norm},
                {"candidates", candidates}};
    const auto path = ctx.output_path("output");
    if (path.empty()) {
        throw invalid_input("missing required parameter --output");
    }
    save_output_image(ImageBuffer{img.rows, img.cols, r.recovered_signal, "detect-patch"}, path);
    emit_json(ctx, "report", report);
}

// ---- verify ----

inline json verify_uncertainty(const TransformKind &kind, std::size_t k, std::size_t trials, std::uint64_t seed) {
    const double random = uncertainty_check(kind, k, trials, seed, UncertaintyProbe::Random);
    const double aligned = uncertainty_check(kind, k, trials, seed, UncertaintyProbe::Aligned);
    const double worst = std::max(random, aligned);
    return {{"suite", "uncertainty"},
            {"ratio_random", random},
            {"ratio_aligned", aligned},
            {"tolerance", 1.0 + 1e-12},
            {"pass", worst <= 1.0 + 1e-12}};
}

inline json verify_rip(const TransformKind &kind, std::size_t k, std::size_t t, bool exhaustive, const Context &ctx) {
    RipOptions o;
    o.mode = exhaustive ? RipMode::Exhaustive : RipMode::Auto;
    o.samples = ctx.get<std::size_t>("samples");
    o.seed = ctx.get<std::uint64_t>("seed");
    o.threads = ctx.threads();
    const RipReport r = model_rip_constant(kind, k, t, ctx.get<std::size_t>("exhaustive_limit"), o);
    return {{"suite", "rip"},
            {"delta", r.delta},
            {"exhaustive", r.exhaustive},
            {"supports_checked", r.supports_checked},
            {"worst_spectrum_support", r.worst_spectrum_support.indices()},
            {"worst_signal_support", r.worst_signal_support.indices()},
            {"within_0_1", r.delta <= 0.1},
            {"pass", r.delta < 1.0}};
}

inline json verify_convergence(const TransformKind &kind, std::size_t k, std::size_t t, std::size_t trials,
                               std::uint64_t seed) {
    const std::size_t n = kind.size();
    std::size_t good = 0;
    double worst = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        InstanceSpec spec;
        spec.k = k;
        spec.t = t;
        spec.seed = seed + trial;
        const SyntheticInstance inst = make_instance(kind, spec);
        const ComplexVector truth_head = head(inst.truth.values, k);
        std::vector<double> errors;
        IhtOptions o;
        o.observer = [&](std::size_t, const ComplexVector &s, const ComplexVector &e) {
            errors.push_back(model_error(s, e, truth_head, inst.e));
        };
        SparsityBudget b{k, t, 60, 0.0};
        (void)iht(inst.y, kind, b, o);
        const double floor = 1e-12 * std::max(1.0, std::hypot(l2_norm(truth_head), l2_norm(inst.e)));
        const double ratio = max_contraction_ratio(errors, floor);
        worst = std::max(worst, ratio);
        good += ratio <= 0.6 ? 1 : 0;
    }
    const double fraction = trials == 0 ? 1.0 : static_cast<double>(good) / static_cast<double>(trials);
    return {{"suite", "convergence"},
            {"n", n},
            {"trials", trials},
            {"fraction_ratio_le_0_6", fraction},
            {"worst_ratio", worst},
            {"pass", fraction >= 0.95}};
}

inline json verify_oracle(const TransformKind &kind, std::size_t k, std::size_t t, std::size_t trials,
                          std::uint64_t seed) {
    std::size_t agree = 0;
    double worst = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        InstanceSpec spec;
        spec.k = k;
        spec.t = t;
        spec.seed = seed + trial;
        const SyntheticInstance inst = make_instance(kind, spec);
        const DecodeResult oracle = bruteforce_decode(inst.y, kind, k, t);
        double gap = 0.0;
        for (UpdateOrder order : {UpdateOrder::Paper, UpdateOrder::Sequential}) {
            IhtOptions o;
            o.order = order;
            const RecoveryReport r = iht(inst.y, kind, SparsityBudget{k, t, 200, 0.0}, o);
            for (std::size_t i = 0; i < kind.size(); ++i) {
                gap = std::max(gap, std::abs(r.spectrum_estimate.values[i] - oracle.spectrum.values[i]));
                gap = std::max(gap, std::abs(r.noise_estimate[i] - oracle.noise[i]));
            }
        }
        worst = std::max(worst, gap);
        agree += gap <= 1e-6 ? 1 : 0;
    }
    return {{"suite", "oracle"},
            {"trials", trials},
            {"agreeing", agree},
            {"worst_gap", worst},
            {"tolerance", 1e-6},
            {"pass", agree == trials}};
}

inline void run_verify(const Context &ctx) {
    const std::string suite = ctx.get<std::string>("suite");
    const std::size_t n = ctx.get<std::size_t>("n");
    const std::size_t k = ctx.get<std::size_t>("k");
    const std::size_t t = ctx.get<std::size_t>("t");
    const std::size_t trials = ctx.get<std::size_t>("trials");
    const std::uint64_t seed = ctx.get<std::uint64_t>("seed");
    const TransformKind kind = TransformKind::one_d(family_from_string(ctx.get<std::string>("transform")), n);
    kind.validate();
    const std::vector<std::string> known{"uncertainty", "rip", "convergence", "oracle"};
    std::vector<std::string> selected;
    if (suite == "all") {
        selected = known;
    } else if (std::find(known.begin(), known.end(), suite) != known.end()) {
        selected = {suite};
    } else {
        throw invalid_input("unknown --suite '" + suite + "' (expected uncertainty|rip|convergence|oracle|all)");
    }
    json results = json::array();
    bool pass = true;
    for (const std::string &s : selected) {
        json r;
        if (s == "uncertainty") {
            r = verify_uncertainty(kind, k, trials, seed);
        } else if (s == "rip") {
            r = verify_rip(kind, k, t, ctx.get<bool>("exhaustive"), ctx);
        } else if (s == "convergence") {
            r = verify_convergence(kind, k, t, trials, seed);
        } else {
            r = verify_oracle(kind, k, t, trials, seed);
        }
        pass = pass && r["pass"].get<bool>();
        results.push_back(r);
    }
    emit_json(ctx, "report", json{{"config", ctx.config()}, {"results", results}, {"pass", pass}});
}

// ---- bench ----

inline void run_bench(const Context &ctx) {
    const ImageBuffer img = load_image(ctx.required_path("input"));
    const TransformKind kind = image_kind(ctx, img);
    const Transform transform(kind);
    const std::size_t k = ctx.get<std::size_t>("k");
    const std::size_t t_min = ctx.get<std::size_t>("t_min");
    const std::size_t t_max = ctx.get<std::size_t>("t_max");
    const std::size_t t_step = ctx.get<std::size_t>("t_step");
    if (t_step == 0 || t_min > t_max) {
        throw invalid_input("bench: need t_step > 0 and t_min <= t_max");
    }
    if (k == 0 || k > kind.size()) {
        throw invalid_input("bench: k must be in [1, rows*cols]");
    }
    const Signal reference = compress(img.pixels, transform, k);
    const Magnitude magnitude = magnitude_from(ctx);
    const IhtOptions options = iht_options_from(ctx);
    const auto path = ctx.output_path("output");
    if (path.empty()) {
        throw invalid_input("missing required parameter --output");
    }
    std::ofstream csv = open_csv(path, ctx.config());
    csv << "t,psnr_corrupted,psnr_recovered,linf,l2,wall_time_ms\n";
    for (std::size_t t = t_min; t <= t_max; t += t_step) {
        CorruptionSpec spec;
        spec.t = t;
        spec.magnitude = magnitude;
        spec.seed = ctx.get<std::uint64_t>("seed") + t;
        const Corruption c = random_l0(reference, spec);
        const SparsityBudget b{k, t, ctx.get<std::size_t>("T"), ctx.get<double>("stop_tol")};
        const auto start = std::chrono::steady_clock::now();
        const RecoveryReport r = iht(c.y, transform, b, options);
        const auto stop = std::chrono::steady_clock::now();
        const ErrorMetrics before = error_metrics(c.y, reference);
        const ErrorMetrics after = error_metrics(r.recovered_signal, reference);
        const auto fmt = [](double v) -> std::string {
            if (std::isinf(v)) {
                return v > 0 ? "inf" : "-inf";
            }
            std::ostringstream s;
            s << std::setprecision(17) << v;
            return s.str();
        };
        csv << t << ',' << fmt(before.psnr_db) << ',' << fmt(after.psnr_db) << ',' << fmt(after.linf) << ','
            << fmt(after.l2) << ',' << std::chrono::duration<double, std::milli>(stop - start).count() << '\n';
        if (t_max - t < t_step) {
            break;
        }
    }
}

}  // namespace detail

inline std::vector<Param> with_seed(std::vector<Param> params) {
    params.push_back({"seed", ParamType::UInt, 0, "random seed"});
    return params;
}

/// The subcommand table; the params double as the JSON config schema.
inline const std::vector<Command> &commands() {
    static const std::vector<Command> table = [] {
        const Param input{"input", ParamType::String, "", "input image (.pgm or .png)"};
        const Param output{"output", ParamType::String, "", "output path"};
        const Param report{"report", ParamType::String, "", "JSON report path (stdout when empty)"};
        const Param transform{"transform", ParamType::String, "dct2", "dft|dct2|dst|hadamard"};
        const Param k{"k", ParamType::UInt, 40, "spectrum sparsity"};
        const Param t{"t", ParamType::UInt, 0, "corruption sparsity"};
        const Param T{"T", ParamType::UInt, 50, "iteration cap"};
        const Param mode{"mode", ParamType::String, "paper", "update order: paper|sequential"};
        const Param init{"init", ParamType::String, "zeros", "zeros|random"};
        const Param tol{"stop_tol", ParamType::Double, 1e-9, "early-stop relative change (0 disables)"};
        const Param thr{"thresholding", ParamType::String, "topk", "topk|pairs (pairs: DFT only)"};
        const Param mag{"magnitude", ParamType::String, "extreme", "gaussian|constant|extreme"};
        const Param magv{"magnitude_value", ParamType::Double, 10.0, "sigma, constant, or multiplier of max|x|"};
        std::vector<Command> c;
        c.push_back({"compress",
                     "project an image onto its top-k transform coefficients",
                     with_seed({input, output, report, k, transform, thr,
                                {"block", ParamType::UInt, 0, "block side for block-wise DCT (0: whole image)"}}),
                     detail::run_compress});
        c.push_back({"corrupt",
                     "add sparse corruption to an image",
                     with_seed({input, output, report,
                                {"noise_output", ParamType::String, "", "e-image path, encoded as 0.5 + e/2"},
                                {"mode", ParamType::String, "random", "random|largest|patch"}, t, mag, magv,
                                {"patch_side", ParamType::UInt, 8, "patch side (patch mode)"},
                                {"anchor_row", ParamType::Int, -1, "patch top row (-1: drawn from seed)"},
                                {"anchor_col", ParamType::Int, -1, "patch left column (-1: drawn from seed)"},
                                {"circular", ParamType::Bool, false, "circular patch mask"}}),
                     detail::run_corrupt});
        c.push_back({"recover",
                     "recover an image from sparse corruption by model-based IHT",
                     with_seed({input, output, report,
                                {"trace", ParamType::String, "", "residual trace CSV path"}, k, t, T, mode, init, tol,
                                transform, thr,
                                {"reference", ParamType::String, "", "clean image for PSNR reporting"},
                                {"block", ParamType::UInt, 0, "recover per block of this side (0: whole image)"}}),
                     detail::run_recover});
        c.push_back({"detect-patch",
                     "localize one square corrupted patch by patchwise IHT",
                     with_seed({input, output, report, k, T,
                                {"patch_side", ParamType::UInt, 8, "candidate patch side"},
                                {"stride", ParamType::UInt, 0, "candidate stride (0: max(1, side/2))"},
                                {"selector", ParamType::String, "norm", "norm|residual"},
                                {"noise_update", ParamType::String, "block", "block|head"},
                                {"t", ParamType::UInt, 0, "noise budget inside the block (head update only)"}, mode,
                                transform, tol}),
                     detail::run_detect_patch});
        c.push_back({"verify",
                     "run the verification suites and report measured constants",
                     with_seed({report, {"suite", ParamType::String, "all", "uncertainty|rip|convergence|oracle|all"},
                                {"n", ParamType::UInt, 16, "signal length"},
                                {"k", ParamType::UInt, 2, "spectrum sparsity"},
                                {"t", ParamType::UInt, 2, "corruption sparsity"}, transform,
                                {"exhaustive", ParamType::Bool, false, "force exhaustive RIP enumeration"},
                                {"exhaustive_limit", ParamType::UInt, 1000000, "support pairs allowed exhaustively"},
                                {"samples", ParamType::UInt, 10000, "sampled RIP support pairs"},
                                {"trials", ParamType::UInt, 100, "random trials per suite"}}),
                     detail::run_verify});
        c.push_back({"bench",
                     "sweep the corruption count on one image and emit a CSV",
                     with_seed({input, output, k, T, mode, init, tol, transform, mag, magv,
                                {"thresholding", ParamType::String, "topk", "topk|pairs (pairs: DFT only)"},
                                {"t_min", ParamType::UInt, 0, "first t"},
                                {"t_max", ParamType::UInt, 50, "last t"},
                                {"t_step", ParamType::UInt, 5, "t increment"}}),
                     detail::run_bench});
        return c;
    }();
    return table;
}

inline std::size_t default_threads() {
    if (const char *env = std::getenv("L0ROBUST_THREADS")) {
        try {
            const unsigned long v = std::stoul(env);
            if (v > 0) {
                return v;
            }
        } catch (const std::logic_error &) {
        }
        throw invalid_input(std::string("L0ROBUST_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"L0-robust sparse recovery"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker threads (0: L0ROBUST_THREADS or 1)");

    struct Bound {
        const Command *command;
        CLI::App *app;
        std::string config_path;
        std::map<std::string, std::string> raw;
        std::map<std::string, bool> flags;
        std::map<std::string, CLI::Option *> options;
    };
    std::vector<Bound> bound(commands().size());
    for (std::size_t i = 0; i < commands().size(); ++i) {
        const Command &cmd = commands()[i];
        Bound &b = bound[i];
        b.command = &cmd;
        b.app = app.add_subcommand(cmd.name, cmd.help);
        b.app->add_option("--config", b.config_path, "JSON config file (or an artifact with a \"config\" object)");
        for (const Param &p : cmd.params) {
            const std::string flag = "--" + Context::flag_name(p.key);
            const std::string help = p.help + " [default " + p.default_value.dump() + "]";
            if (p.type == ParamType::Bool) {
                b.options[p.key] = b.app->add_flag(flag, b.flags[p.key], help);
            } else {
                b.options[p.key] = b.app->add_option(flag, b.raw[p.key], help);
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        const Bound *chosen = nullptr;
        for (const Bound &b : bound) {
            if (b.app->parsed()) {
                chosen = &b;
            }
        }
        const Command &cmd = *chosen->command;
        json config = json::object();
        for (const Param &p : cmd.params) {
            config[p.key] = p.default_value;
        }
        if (!chosen->config_path.empty()) {
            const json file = detail::load_config_file(chosen->config_path, cmd.name);
            for (const auto &[key, value] : file.items()) {
                const auto it = std::find_if(cmd.params.begin(), cmd.params.end(),
                                             [&](const Param &p) { return p.key == key; });
                if (it == cmd.params.end()) {
                    throw invalid_input("config key '" + key + "' is not a parameter of '" + cmd.name + "'");
                }
                detail::check_type(*it, value);
                config[key] = value;
            }
        }
        for (const Param &p : cmd.params) {
            if (chosen->options.at(p.key)->count() == 0) {
                continue;
            }
            config[p.key] = p.type == ParamType::Bool ? json(chosen->flags.at(p.key))
                                                      : detail::convert_flag(p, chosen->raw.at(p.key));
        }
        json resolved{{"command", cmd.name}};
        resolved.update(config);

        const std::size_t nthreads = threads > 0 ? threads : default_threads();
        std::filesystem::path output_dir;
        if (const char *env = std::getenv("L0ROBUST_OUTPUT_DIR")) {
            output_dir = env;
        }
        cmd.run(Context(resolved, nthreads, output_dir, out));
        return kExitOk;
    } catch (const invalid_input &e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const io_error &e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const json::exception &e) {
        err << "error: bad configuration value: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const std::exception &e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace l0robust::cli
