// explab: expressivity, metrics and data tooling for representation probing.
//
// Exit codes: 0 success, 1 usage or input error, 2 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "explab/balance.hpp"
#include "explab/error.hpp"
#include "explab/expressivity.hpp"
#include "explab/io.hpp"
#include "explab/metrics.hpp"
#include "explab/plot.hpp"
#include "explab/report.hpp"
#include "explab/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace explab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;

struct MineFlags {
    std::size_t seeds = 10;
    std::size_t steps = 2000;
    std::size_t batch = 100;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden{256, 64};
    double window = 0.1;
    double max_epochs = 10.0;
    double ema_rate = 0.01;
    bool no_ema = false;
    bool no_standardize = false;

    void add_to(CLI::App& app) {
        app.add_option("--seeds", seeds, "Number of MINE repeats (M)")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--steps", steps, "Maximum training steps per run")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--batch", batch, "Minibatch size")->capture_default_str()->check(CLI::Range(2, 1 << 30));
        app.add_option("--lr", lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Base seed; repeat i uses seed + i")->capture_default_str();
        app.add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',')->expected(2)->capture_default_str();
        app.add_option("--window", window, "Fraction of final steps averaged into the estimate")->capture_default_str();
        app.add_option("--max-epochs", max_epochs, "Cap on passes over the data (0 = no cap)")->capture_default_str();
        app.add_option("--ema-rate", ema_rate, "EMA rate for the marginal-term gradient")->capture_default_str();
        app.add_flag("--no-ema", no_ema, "Use the plain minibatch gradient for the marginal term");
        app.add_flag("--no-standardize", no_standardize, "Feed raw (not z-scored) inputs to the critic");
    }

    ExpressivityOptions options() const {
        ExpressivityOptions o;
        o.m_repeats = seeds;
        o.config.hidden_dims = {hidden.at(0), hidden.at(1)};
        o.config.lr = lr;
        o.config.batch_size = batch;
        o.config.train_steps = steps;
        o.config.max_epochs = max_epochs;
        o.config.estimate_window = window;
        o.config.ema_rate = ema_rate;
        o.config.use_ema_correction = !no_ema;
        o.config.rng_seed = seed;
        o.config.standardize_inputs = !no_standardize;
        return o;
    }
};

RunManifest make_manifest(std::string subcommand, json config, const std::vector<fs::path>& inputs,
                          std::uint64_t seed) {
    RunManifest m;
    m.subcommand = std::move(subcommand);
    m.config = std::move(config);
    for (const auto& p : inputs) {
        m.inputs.push_back({p.string(), file_digest(p)});
    }
    m.base_seed = seed;
    m.timestamp = utc_timestamp();
    return m;
}

json document(const RunManifest& manifest) {
    return {{"schema_version", kSchemaVersion}, {"manifest", to_json(manifest)}};
}

void print_warnings(const std::vector<std::string>& warnings, std::string_view context) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << context << w << '\n';
    }
}

std::vector<std::string> names_or_stems(const std::vector<std::string>& names, const std::vector<fs::path>& paths,
                                        std::string_view what) {
    if (names.empty()) {
        std::vector<std::string> stems;
        for (const auto& p : paths) {
            stems.push_back(p.stem().string());
        }
        return stems;
    }
    if (names.size() != paths.size()) {
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(names.size()) + " names for " +
                                    std::to_string(paths.size()) + " files");
    }
    return names;
}

int run_expressivity(const fs::path& features_path, const fs::path& attribute_path, std::string layer_name,
                     std::string attribute_name, const MineFlags& flags, const fs::path& out) {
    const auto features = read_features(features_path);
    const auto attribute = read_attribute(attribute_path);
    if (layer_name.empty()) {
        layer_name = features_path.stem().string();
    }
    if (attribute_name.empty()) {
        attribute_name = attribute_path.stem().string();
    }
    const auto options = flags.options();
    const auto result = compute_expressivity(features, attribute, options, layer_name, attribute_name);
    print_warnings(result.warnings, layer_name + "/" + attribute_name + ": ");

    json config = to_json(options.config);
    config["m_repeats"] = options.m_repeats;
    auto doc = document(make_manifest("expressivity", config, {features_path, attribute_path}, options.config.rng_seed));
    doc.update(to_json(result));
    write_json(out, doc);
    return kExitOk;
}

int run_sweep(const std::vector<fs::path>& layer_paths, std::vector<std::string> layer_names,
              const std::vector<fs::path>& attribute_paths, std::vector<std::string> attribute_names,
              const MineFlags& flags, const fs::path& out, const std::string& svg_path) {
    layer_names = names_or_stems(layer_names, layer_paths, "--layer-names");
    attribute_names = names_or_stems(attribute_names, attribute_paths, "--attribute-names");
    std::vector<NamedFeatures> layers;
    for (std::size_t i = 0; i < layer_paths.size(); ++i) {
        layers.push_back({layer_names[i], read_features(layer_paths[i])});
    }
    std::vector<NamedAttribute> attributes;
    for (std::size_t i = 0; i < attribute_paths.size(); ++i) {
        attributes.push_back({attribute_names[i], read_attribute(attribute_paths[i])});
    }
    const auto options = flags.options();
    const auto result = sweep(layers, attributes, options);
    for (const auto& c : result.cells) {
        print_warnings(c.warnings, c.layer_name + "/" + c.attribute_name + ": ");
    }

    std::vector<fs::path> inputs = layer_paths;
    inputs.insert(inputs.end(), attribute_paths.begin(), attribute_paths.end());
    json config = to_json(options.config);
    config["m_repeats"] = options.m_repeats;
    auto doc = document(make_manifest("sweep", config, inputs, options.config.rng_seed));
    doc.update(to_json(result));
    write_json(out, doc);
    if (!svg_path.empty()) {
        const auto svg = render_sweep_svg(result);
        write_file_bytes(svg_path, std::span(reinterpret_cast<const unsigned char*>(svg.data()), svg.size()));
    }
    return kExitOk;
}

void write_curve(const fs::path& path, std::string_view header, const std::vector<CurvePoint>& points) {
    Matrix m(points.size(), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m(i, 0) = points[i].x;
        m(i, 1) = points[i].y;
    }
    const std::string text = std::string(header) + "\n" + format_csv(m);
    write_file_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

int run_metrics(const fs::path& scores_path, const fs::path& labels_path, const BootstrapOptions& boot,
                const fs::path& out, const std::string& curves_dir) {
    LabeledScores data{read_attribute(scores_path), read_labels(labels_path)};
    data.validate();
    const auto roc = bootstrap_ci(data, Metric::Auroc, boot);
    const auto pr = bootstrap_ci(data, Metric::Auprc, boot);

    const json config = {{"n_boot", boot.n_boot}, {"ci_level", boot.level}, {"seed", boot.seed},
                         {"ci_method", "percentile bootstrap, sample-level resampling"}};
    auto doc = document(make_manifest("metrics", config, {scores_path, labels_path}, boot.seed));
    doc["n"] = data.size();
    doc["n_pos"] = data.positives();
    doc["auroc"] = to_json(roc);
    doc["auprc"] = to_json(pr);
    write_json(out, doc);

    if (!curves_dir.empty()) {
        fs::create_directories(curves_dir);
        write_curve(fs::path(curves_dir) / "roc.csv", "fpr,tpr", roc_points(data));
        write_curve(fs::path(curves_dir) / "pr.csv", "recall,precision", pr_points(data));
    }
    return kExitOk;
}

int run_synth(const SyntheticSpec& spec, const fs::path& out_features, const fs::path& out_attribute,
              std::string sidecar) {
    const auto data = gen_synthetic(spec);
    write_features(out_features, data.features);
    write_attribute(out_attribute, data.attribute);
    if (sidecar.empty()) {
        sidecar = out_features.string() + ".json";
    }
    auto doc = document(make_manifest("synth", to_json(spec), {}, spec.seed));
    doc["spec"] = to_json(spec);
    doc["true_mi_known"] = data.true_mi_nats.has_value();
    doc["true_mi_nats"] = data.true_mi_nats ? json(*data.true_mi_nats) : json(nullptr);
    doc["outputs"] = {{"features", out_features.string()}, {"attribute", out_attribute.string()}};
    write_json(sidecar, doc);
    return kExitOk;
}

int run_balance(const fs::path& metadata_path, std::uint64_t seed, const fs::path& out) {
    const auto rows = read_metadata(metadata_path);
    const auto splits = splits_from_metadata(rows);
    const auto balanced = balance_classes(splits, seed);

    json split_docs = json::array();
    for (const auto& b : balanced) {
        std::vector<std::string> ids;
        for (std::size_t idx : b.selected) {
            ids.push_back(rows[idx].id);
        }
        split_docs.push_back({{"split", std::string(to_string(b.name))},
                              {"selected_ids", ids},
                              {"counts_before", to_json(b.before)},
                              {"counts_after", to_json(b.after)}});
        std::cerr << to_string(b.name) << ": " << b.after.positive << " positive / " << b.after.negative
                  << " negative (from " << b.before.positive << " / " << b.before.negative << ")\n";
    }
    auto doc = document(make_manifest("balance", {{"seed", seed}}, {metadata_path}, seed));
    doc["splits"] = split_docs;
    write_json(out, doc);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explab: mutual-information expressivity of feature representations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // expressivity
    auto* expr = app.add_subcommand("expressivity", "MINE expressivity of one feature matrix for one attribute");
    fs::path expr_features, expr_attribute, expr_out;
    std::string expr_layer, expr_attr_name;
    MineFlags expr_flags;
    expr->add_option("--features", expr_features, "Feature matrix (CSV or FAM1)")->required()->check(CLI::ExistingFile);
    expr->add_option("--attribute", expr_attribute, "Attribute column (CSV or FAM1)")->required()->check(CLI::ExistingFile);
    expr->add_option("--layer-name", expr_layer, "Label for the layer (default: features file stem)");
    expr->add_option("--attribute-name", expr_attr_name, "Label for the attribute (default: attribute file stem)");
    expr->add_option("--out", expr_out, "Output JSON")->required();
    expr_flags.add_to(*expr);

    // sweep
    auto* sw = app.add_subcommand("sweep", "Expressivity grid over layers x attributes");
    std::vector<fs::path> sw_layers, sw_attributes;
    std::vector<std::string> sw_layer_names, sw_attribute_names;
    fs::path sw_out;
    std::string sw_svg;
    MineFlags sw_flags;
    sw->add_option("--layers", sw_layers, "Feature files in depth order")->required()->delimiter(',')->check(CLI::ExistingFile);
    sw->add_option("--layer-names", sw_layer_names, "Layer labels (default: file stems)")->delimiter(',');
    sw->add_option("--attributes", sw_attributes, "Attribute files")->required()->delimiter(',')->check(CLI::ExistingFile);
    sw->add_option("--attribute-names", sw_attribute_names, "Attribute labels (default: file stems)")->delimiter(',');
    sw->add_option("--out", sw_out, "Output JSON")->required();
    sw->add_option("--svg", sw_svg, "Optional SVG chart");
    sw_flags.add_to(*sw);

    // metrics
    auto* met = app.add_subcommand("metrics", "AUROC/AUPRC with percentile-bootstrap confidence intervals");
    fs::path met_scores, met_labels, met_out;
    std::string met_curves;
    BootstrapOptions boot;
    met->add_option("--scores", met_scores, "Score column")->required()->check(CLI::ExistingFile);
    met->add_option("--labels", met_labels, "0/1 label column")->required()->check(CLI::ExistingFile);
    met->add_option("--bootstrap", boot.n_boot, "Bootstrap resamples")->capture_default_str()->check(CLI::PositiveNumber);
    met->add_option("--level", boot.level, "Confidence level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    met->add_option("--seed", boot.seed, "Seed; resample i uses seed + i")->capture_default_str();
    met->add_option("--out", met_out, "Output JSON")->required();
    met->add_option("--curves-out", met_curves, "Directory for roc.csv and pr.csv");

    // synth
    auto* syn = app.add_subcommand("synth", "Generate synthetic data with known mutual information");
    syn->require_subcommand(1);
    SyntheticSpec spec;
    std::string attr_type = "continuous";
    fs::path syn_features, syn_attribute;
    std::string syn_sidecar;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--n", spec.n, "Number of samples")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--seed", spec.seed, "Seed")->capture_default_str();
        cmd->add_option("--out-features", syn_features, "Features output (.fam1/.bin for FAM1, else CSV)")->required();
        cmd->add_option("--out-attribute", syn_attribute, "Attribute output")->required();
        cmd->add_option("--sidecar", syn_sidecar, "Sidecar JSON (default: <out-features>.json)");
    };
    auto* gauss = syn->add_subcommand("gaussian", "1-D feature and attribute, jointly Gaussian");
    gauss->add_option("--rho", spec.rho, "Correlation, |rho| < 1")->required();
    add_common(gauss);
    auto* indep = syn->add_subcommand("independent", "Standard normal features and an independent attribute");
    indep->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
    indep->add_option("--attribute-type", attr_type, "continuous or binary")->check(CLI::IsMember({"continuous", "binary"}));
    add_common(indep);
    auto* emb = syn->add_subcommand("embedded", "Attribute embedded along a random direction plus noise");
    emb->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
    emb->add_option("--snr", spec.snr, "Signal-to-noise ratio (noise std = 1/snr)")->required();
    emb->add_option("--attribute-type", attr_type, "continuous or binary")->check(CLI::IsMember({"continuous", "binary"}));
    add_common(emb);

    // balance
    auto* bal = app.add_subcommand("balance", "Per-split class balancing by majority downsampling");
    fs::path bal_metadata, bal_out;
    std::uint64_t bal_seed = 0;
    bal->add_option("--metadata", bal_metadata, "CSV with header id,split,label[,group]")->required()->check(CLI::ExistingFile);
    bal->add_option("--seed", bal_seed, "Seed")->required();
    bal->add_option("--out", bal_out, "Output JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*expr) {
            return run_expressivity(expr_features, expr_attribute, expr_layer, expr_attr_name, expr_flags, expr_out);
        }
        if (*sw) {
            return run_sweep(sw_layers, sw_layer_names, sw_attributes, sw_attribute_names, sw_flags, sw_out, sw_svg);
        }
        if (*met) {
            return run_metrics(met_scores, met_labels, boot, met_out, met_curves);
        }
        if (*syn) {
            spec.attribute_type = attr_type == "binary" ? AttributeType::Binary : AttributeType::Continuous;
            spec.kind = *gauss ? SyntheticKind::GaussianPair
                               : (*indep ? SyntheticKind::Independent : SyntheticKind::EmbeddedAttribute);
            return run_synth(spec, syn_features, syn_attribute, syn_sidecar);
        }
        if (*bal) {
            return run_balance(bal_metadata, bal_seed, bal_out);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
