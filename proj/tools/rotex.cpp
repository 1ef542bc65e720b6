// Command-line front end: training, feature extraction, shallow classification,
// gradient checking, filter export and the small-sample benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rotex/data.hpp"
#include "rotex/errors.hpp"
#include "rotex/features.hpp"
#include "rotex/filterbank.hpp"
#include "rotex/net.hpp"
#include "rotex/parallel.hpp"
#include "rotex/rotate.hpp"
#include "rotex/serialize.hpp"
#include "rotex/shallowml.hpp"
#include "rotex/train.hpp"
#include "rotex/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rotex;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitAcceptance = 5;

struct GridSpec {
    std::size_t rows = 2;
    std::size_t cols = 2;
};

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    char sep = 0;
    std::istringstream in(text);
    if (!(in >> g.rows >> sep >> g.cols) || (sep != 'x' && sep != 'X') || g.rows == 0 ||
        g.cols == 0) {
        throw ConfigError("grid must look like 2x2, got \"" + text + "\"");
    }
    return g;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_manifest(const std::string& out_dir, const std::string& subcommand, json config,
                    const std::vector<std::string>& inputs, const std::string& data_hash,
                    const std::vector<std::string>& outputs) {
    json manifest = {
        {"tool", kToolName},   {"version", kToolVersion}, {"subcommand", subcommand},
        {"config", std::move(config)}, {"inputs", inputs},        {"dataset_hash", data_hash},
        {"outputs", outputs},
    };
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

struct DataArgs {
    std::string problem_dir;
    std::string synth;  // "default" or a JSON path
    std::size_t synth_train = 10;
    std::size_t synth_test = 50;
};

void add_data_flags(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--data", args.problem_dir, "problem directory (train.txt/test.txt/images)");
    cmd->add_option("--synth", args.synth, "synthetic dataset: 'default' or a JSON spec file");
    cmd->add_option("--synth-train", args.synth_train, "synthetic training images per class");
    cmd->add_option("--synth-test", args.synth_test, "synthetic test images per class");
}

SynthSet resolve_synth_set(const std::string& spec) {
    return spec == "default" ? default_synth_set() : load_synth_set(spec);
}

// Loads either a real problem or samples a synthetic one (train at
// orientation 0, test at uniform random orientations).
Problem resolve_problem(const DataArgs& args, std::uint64_t seed) {
    if (args.problem_dir.empty() == args.synth.empty()) {
        throw ConfigError("exactly one of --data and --synth is required");
    }
    if (!args.problem_dir.empty()) return load_problem(args.problem_dir);
    SynthSet set = resolve_synth_set(args.synth);
    Problem p;
    p.train = make_synth_split(set, args.synth_train, 0.0, seed * 2654435761ull + 1);
    p.test = make_synth_split(set, args.synth_test, -1.0, seed * 2654435761ull + 2);
    return p;
}

std::size_t auto_crop(std::size_t rows, std::size_t cols, std::size_t side) {
    std::size_t limit = std::min(rows, cols);
    // 0.70 < 1/sqrt(2): safe for any rotation angle of the augmented baseline
    std::size_t crop = std::min<std::size_t>(88, static_cast<std::size_t>(
                                                     std::floor(0.70 * static_cast<double>(limit))));
    crop = std::max(crop, side);
    if (crop > limit) {
        throw ConfigError("images too small for filter side " + std::to_string(side));
    }
    return crop;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    DataArgs data;
    std::string arch = "rotatable";
    std::size_t groups = 16;
    std::size_t rotations = 32;
    std::size_t filters = 16;  // standard arch
    std::size_t side = 35;
    std::size_t crop = 0;  // 0 = auto
    std::string grid = "2x2";
    double lr = 0.0001;
    double momentum = 0.9;
    double dropout = 0.2;
    double decay2 = 0.1;
    std::size_t batch = 24;
    std::size_t max_epochs = 2000;
    std::size_t patience = 20;
    double holdout = 0.02;
    std::uint64_t seed = 0;
    bool augment = false;
    unsigned threads = default_thread_count();
    std::string out = "out/train";
};

json train_config_json(const TrainArgs& a, const TrainConfig& config) {
    return json{{"arch", a.arch},
                {"groups", config.groups},
                {"rotations", config.rotations},
                {"side", config.side},
                {"crop", config.crop},
                {"pool_rows", config.pool_rows},
                {"pool_cols", config.pool_cols},
                {"learning_rate", config.learning_rate},
                {"momentum", config.momentum},
                {"dropout", config.dropout_rate},
                {"weight_decay_phase2", config.weight_decay_phase2},
                {"batch_size", config.batch_size},
                {"max_epochs", config.max_epochs},
                {"patience", config.patience},
                {"holdout", a.holdout},
                {"seed", config.seed},
                {"augment_rotations", config.augment_rotations}};
}

TrainConfig make_train_config(const TrainArgs& a, const Problem& problem) {
    TrainConfig config;
    config.learning_rate = a.lr;
    config.momentum = a.momentum;
    config.dropout_rate = a.dropout;
    config.weight_decay_phase2 = a.decay2;
    config.batch_size = a.batch;
    config.max_epochs = a.max_epochs;
    config.patience = a.patience;
    config.seed = a.seed;
    config.side = a.side;
    config.threads = a.threads;
    config.augment_rotations = a.augment;
    GridSpec grid = parse_grid(a.grid);
    config.pool_rows = grid.rows;
    config.pool_cols = grid.cols;
    if (a.arch == "rotatable") {
        config.groups = a.groups;
        config.rotations = a.rotations;
    } else if (a.arch == "standard") {
        config.groups = a.filters;
        config.rotations = 1;
    } else {
        throw ConfigError("--arch must be rotatable or standard, got " + a.arch);
    }
    const Tensor& sample = problem.train.images.front();
    config.crop = a.crop != 0 ? a.crop : auto_crop(sample.rows(), sample.cols(), a.side);
    config.validate();
    return config;
}

int cmd_train(const TrainArgs& a) {
    Problem problem = resolve_problem(a.data, a.seed);
    TrainConfig config = make_train_config(a, problem);

    DatasetSplit train_split, val_split;
    holdout_split(problem.train, a.holdout, a.seed, train_split, val_split);

    std::mt19937_64 rng(a.seed);
    NetworkParams params =
        NetworkParams::random_init(config.groups, config.rotations, config.side,
                                   problem.train.class_count, config.pool_rows, config.pool_cols,
                                   0.01, rng);

    TrainHistory history = train(params, train_split, val_split, config);

    fs::create_directories(a.out);
    std::string ckpt = a.out + "/checkpoint.bin";
    std::string hist = a.out + "/history.csv";
    save_checkpoint(params, ckpt);
    save_history_csv(history, hist);

    std::string hash = hex64(dataset_hash(problem.train));
    std::vector<std::string> inputs;
    if (!a.data.problem_dir.empty()) inputs.push_back(a.data.problem_dir);
    if (!a.data.synth.empty()) inputs.push_back("synth:" + a.data.synth);
    write_manifest(a.out, "train", train_config_json(a, config), inputs, hash,
                   {ckpt, hist});

    std::cout << "trained " << a.arch << " model: " << history.records.size() << " epochs, best val loss "
              << history.best_val_loss << " at epoch " << history.best_epoch << "\n"
              << "checkpoint: " << ckpt << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
    std::string checkpoint;
    std::string data_dir;
    std::string split = "both";
    std::size_t r_eval = 21;
    std::string grid = "4x4";
    std::string block = "both";
    unsigned threads = default_thread_count();
    std::string out = "out/extract";
};

FeatureBlock parse_block(const std::string& text) {
    if (text == "local") return FeatureBlock::kLocal;
    if (text == "global") return FeatureBlock::kGlobal;
    if (text == "both") return FeatureBlock::kBoth;
    throw ConfigError("--block must be local, global or both, got " + text);
}

int cmd_extract(const ExtractArgs& a) {
    if (a.checkpoint.empty() || a.data_dir.empty()) {
        throw ConfigError("extract needs --checkpoint and --data");
    }
    NetworkParams params = load_checkpoint(a.checkpoint);
    Problem problem = load_problem(a.data_dir);
    GridSpec grid = parse_grid(a.grid);
    FeatureBlock block = parse_block(a.block);

    fs::create_directories(a.out);
    std::vector<std::string> outputs;
    std::string hash;
    for (const std::string& which : {std::string("train"), std::string("test")}) {
        if (a.split != "both" && a.split != which) continue;
        const DatasetSplit& split = which == "train" ? problem.train : problem.test;
        FeatureMatrix features =
            extract_feature_matrix(split, params.bank, a.r_eval, grid.rows, grid.cols, block,
                                   params.input_mean, params.input_std, CorrMethod::kAuto,
                                   a.threads);
        std::string csv = a.out + "/features_" + which + ".csv";
        std::string bin = a.out + "/features_" + which + ".bin";
        save_features_csv(features, csv);
        save_features_binary(features, bin);
        outputs.push_back(csv);
        outputs.push_back(bin);
        hash += hex64(dataset_hash(split));
        std::cout << which << ": " << features.size() << " rows x " << features.dim
                  << " features\n";
    }
    json config = {{"checkpoint", a.checkpoint}, {"split", a.split},   {"r_eval", a.r_eval},
                   {"grid", a.grid},             {"block", a.block}};
    write_manifest(a.out, "extract", config, {a.checkpoint, a.data_dir}, hash, outputs);
    return 0;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
    std::string train_features;
    std::string test_features;
    std::string clf = "lda";
    std::size_t pca = 35;
    std::string metric = "cityblock";
    bool standardize = false;
    std::string checkpoint;  // softmax path
    std::string data_dir;    // softmax path
    std::uint64_t seed = 0;
    unsigned threads = default_thread_count();
    std::string out = "out/classify";
};

// Per-column z-scoring with statistics from the training rows. The local and
// global descriptor blocks live on very different scales; a common scale makes
// the cityblock metric meaningful across blocks.
void standardize_columns(DataMatrix& train, DataMatrix& test) {
    for (std::size_t j = 0; j < train.cols; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < train.rows; ++i) mean += train.at(i, j);
        mean /= static_cast<double>(train.rows);
        for (std::size_t i = 0; i < train.rows; ++i) {
            double d = train.at(i, j) - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / static_cast<double>(train.rows));
        if (sd < 1e-12) sd = 1.0;
        for (std::size_t i = 0; i < train.rows; ++i) {
            train.at(i, j) = (train.at(i, j) - mean) / sd;
        }
        for (std::size_t i = 0; i < test.rows; ++i) {
            test.at(i, j) = (test.at(i, j) - mean) / sd;
        }
    }
}

FeatureMatrix load_features_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        return load_features_csv(path);
    }
    return load_features_binary(path);
}

json accuracy_report(const std::vector<std::size_t>& labels,
                     const std::vector<std::size_t>& predictions, std::size_t classes) {
    std::vector<std::size_t> per_class_total(classes, 0), per_class_correct(classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++per_class_total[labels[i]];
        if (labels[i] == predictions[i]) {
            ++correct;
            ++per_class_correct[labels[i]];
        }
    }
    json per_class = json::array();
    for (std::size_t c = 0; c < classes; ++c) {
        double acc = per_class_total[c] == 0
                         ? 0.0
                         : static_cast<double>(per_class_correct[c]) /
                               static_cast<double>(per_class_total[c]);
        per_class.push_back({{"class", c},
                             {"total", per_class_total[c]},
                             {"correct", per_class_correct[c]},
                             {"accuracy", acc}});
    }
    double overall = static_cast<double>(correct) / static_cast<double>(labels.size());
    return json{{"overall_accuracy", overall}, {"count", labels.size()}, {"per_class", per_class}};
}

void write_predictions_csv(const std::string& path, const std::vector<std::string>& names,
                           const std::vector<std::size_t>& labels,
                           const std::vector<std::size_t>& predictions) {
    std::ostringstream out;
    out << "name,label,prediction\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << names[i] << "," << labels[i] << "," << predictions[i] << "\n";
    }
    write_text_file(path, out.str());
}

int cmd_classify(const ClassifyArgs& a) {
    fs::create_directories(a.out);
    std::vector<std::size_t> predictions;
    std::vector<std::size_t> labels;
    std::vector<std::string> names;
    std::size_t classes = 0;
    json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string hash;

    if (a.clf == "softmax") {
        if (a.checkpoint.empty() || a.data_dir.empty()) {
            throw ConfigError("--clf softmax needs --checkpoint and --data");
        }
        NetworkParams params = load_checkpoint(a.checkpoint);
        Problem problem = load_problem(a.data_dir);
        TrainConfig eval_config;
        eval_config.crop = params.crop;
        eval_config.side = params.bank.side;
        eval_config.groups = params.bank.groups;
        eval_config.rotations = params.bank.rotations;
        eval_config.threads = a.threads;
        RotatedBank bank(params.bank, params.bank.rotations);
        double acc = evaluate_accuracy(params, bank, problem.test, eval_config, &predictions);
        (void)acc;
        labels = problem.test.labels;
        names = problem.test.names;
        classes = problem.test.class_count;
        config = {{"clf", "softmax"}, {"checkpoint", a.checkpoint}};
        inputs = {a.checkpoint, a.data_dir};
        hash = hex64(dataset_hash(problem.test));
    } else if (a.clf == "lda" || a.clf == "1nn") {
        if (a.train_features.empty() || a.test_features.empty()) {
            throw ConfigError("--clf " + a.clf + " needs --train-features and --test-features");
        }
        if (a.metric != "cityblock") {
            throw ConfigError("only the cityblock metric is supported, got " + a.metric);
        }
        FeatureMatrix train = load_features_any(a.train_features);
        FeatureMatrix test = load_features_any(a.test_features);
        if (train.dim != test.dim) {
            throw ConfigError("train and test features have different dimensions");
        }
        labels = test.labels;
        names = test.names;
        classes = *std::max_element(train.labels.begin(), train.labels.end()) + 1;

        DataMatrix train_matrix = DataMatrix::from_rows(train.rows);
        DataMatrix test_matrix = DataMatrix::from_rows(test.rows);
        if (a.standardize) standardize_columns(train_matrix, test_matrix);
        if (a.pca > 0) {
            PcaModel pca = pca_fit(train_matrix, a.pca);
            std::string pca_path = a.out + "/pca.bin";
            save_pca(pca, pca_path);
            outputs.push_back(pca_path);
            train_matrix = pca_transform_all(pca, train_matrix);
            test_matrix = pca_transform_all(pca, test_matrix);
        }
        if (a.clf == "lda") {
            LdaModel lda = lda_fit(train_matrix, train.labels);
            std::string lda_path = a.out + "/lda.bin";
            save_lda(lda, lda_path);
            outputs.push_back(lda_path);
            predictions.resize(test_matrix.rows);
            for (std::size_t i = 0; i < test_matrix.rows; ++i) {
                std::vector<double> row(test_matrix.values.begin() + i * test_matrix.cols,
                                        test_matrix.values.begin() + (i + 1) * test_matrix.cols);
                predictions[i] = lda_predict(lda, row);
            }
        } else {
            predictions.resize(test_matrix.rows);
            for (std::size_t i = 0; i < test_matrix.rows; ++i) {
                std::vector<double> row(test_matrix.values.begin() + i * test_matrix.cols,
                                        test_matrix.values.begin() + (i + 1) * test_matrix.cols);
                predictions[i] = knn1_cityblock(train_matrix, train.labels, row);
            }
        }
        config = {{"clf", a.clf},
                  {"pca", a.pca},
                  {"metric", a.metric},
                  {"standardize", a.standardize}};
        inputs = {a.train_features, a.test_features};
    } else {
        throw ConfigError("--clf must be lda, 1nn or softmax, got " + a.clf);
    }

    json report = accuracy_report(labels, predictions, classes);
    std::string report_path = a.out + "/report.json";
    std::string pred_path = a.out + "/predictions.csv";
    write_text_file(report_path, report.dump(2) + "\n");
    write_predictions_csv(pred_path, names, labels, predictions);
    outputs.push_back(report_path);
    outputs.push_back(pred_path);
    write_manifest(a.out, "classify", config, inputs, hash, outputs);

    std::cout << "overall accuracy: " << report["overall_accuracy"].get<double>() * 100.0
              << "% over " << labels.size() << " samples\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
    double eps = 1e-5;
    std::size_t groups = 2;
    std::size_t rotations = 8;
    std::size_t side = 9;
    std::size_t classes = 3;
    std::size_t image_size = 24;
    std::size_t batch = 2;
    std::uint64_t seed = 1;
    double threshold = 1e-4;
    bool corrupt = false;  // test hook: breaks the analytic gradient on purpose
    std::string out = "out/gradcheck";
};

struct GradcheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

GradcheckResult run_gradcheck(const GradcheckArgs& a) {
    std::mt19937_64 rng(a.seed);
    NetworkParams params = NetworkParams::random_init(a.groups, a.rotations, a.side, a.classes, 2,
                                                      2, 0.1, rng);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (std::size_t b = 0; b < a.batch; ++b) {
        Tensor img({a.image_size, a.image_size});
        for (std::size_t i = 0; i < img.size(); ++i) img(i) = dist(rng);
        images.push_back(std::move(img));
        labels.push_back(b % a.classes);
    }

    ForwardOptions opts;
    opts.mode = Mode::kTrain;
    opts.dropout_rate = 0.0;

    auto loss_at = [&](const NetworkParams& p) {
        RotatedBank bank(p.bank, p.bank.rotations);
        return net_forward(images, labels, p, bank, opts).loss_sum;
    };

    RotatedBank bank(params.bank, params.bank.rotations);
    NetForward fwd = net_forward(images, labels, params, bank, opts);
    NetGradients grads = net_backward(fwd.cache, params, bank);
    if (a.corrupt) grads.canonical[0]((a.side / 2) * a.side + a.side / 2) += 0.05;

    // (pointer into a parameter array, analytic gradient) pairs
    std::vector<std::pair<double*, double>> entries;
    for (std::size_t i = 0; i < params.bank.canonical.size(); ++i) {
        Tensor& f = params.bank.canonical[i];
        for (std::size_t j = 0; j < f.size(); ++j) entries.push_back({&f(j), grads.canonical[i](j)});
    }
    for (std::size_t i = 0; i < params.bank.biases.size(); ++i) {
        entries.push_back({&params.bank.biases[i], grads.conv_biases[i]});
    }
    for (std::size_t i = 0; i < params.fc_weights.size(); ++i) {
        entries.push_back({&params.fc_weights[i], grads.fc_weights[i]});
    }
    for (std::size_t i = 0; i < params.fc_biases.size(); ++i) {
        entries.push_back({&params.fc_biases[i], grads.fc_biases[i]});
    }

    GradcheckResult result;
    result.checked = entries.size();
    for (auto& [ptr, analytic] : entries) {
        double saved = *ptr;
        *ptr = saved + a.eps;
        double up = loss_at(params);
        *ptr = saved - a.eps;
        double down = loss_at(params);
        *ptr = saved;
        double fd = (up - down) / (2.0 * a.eps);
        double rel = std::abs(fd - analytic) / std::max({1e-6, std::abs(fd), std::abs(analytic)});
        result.max_rel_err = std::max(result.max_rel_err, rel);
    }
    return result;
}

int cmd_gradcheck(const GradcheckArgs& a) {
    auto start = std::chrono::steady_clock::now();
    GradcheckResult result = run_gradcheck(a);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = result.max_rel_err <= a.threshold;

    fs::create_directories(a.out);
    json report = {{"max_rel_err", result.max_rel_err}, {"parameters", result.checked},
                   {"threshold", a.threshold},          {"eps", a.eps},
                   {"seconds", seconds},                {"pass", pass}};
    write_text_file(a.out + "/report.json", report.dump(2) + "\n");
    json config = {{"eps", a.eps},         {"groups", a.groups}, {"rotations", a.rotations},
                   {"side", a.side},       {"classes", a.classes}, {"image_size", a.image_size},
                   {"batch", a.batch},     {"seed", a.seed},     {"threshold", a.threshold}};
    write_manifest(a.out, "gradcheck", config, {}, "", {a.out + "/report.json"});

    std::cout << "gradcheck: max rel err " << result.max_rel_err << " over " << result.checked
              << " parameters in " << seconds << " s -> " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : kExitAcceptance;
}

// ---------------------------------------------------------------------------
// export-filters

struct ExportArgs {
    std::string checkpoint;
    std::size_t rotations = 0;  // also export this many rotated copies
    std::string out = "out/filters";
};

Tensor normalize_for_export(const Tensor& filter) {
    double lo = filter(0), hi = filter(0);
    for (std::size_t i = 0; i < filter.size(); ++i) {
        lo = std::min(lo, filter(i));
        hi = std::max(hi, filter(i));
    }
    Tensor out = filter;
    double range = hi - lo;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out(i) = range > 0.0 ? (out(i) - lo) / range : 0.5;
    }
    return out;
}

int cmd_export_filters(const ExportArgs& a) {
    if (a.checkpoint.empty()) throw ConfigError("export-filters needs --checkpoint");
    NetworkParams params = load_checkpoint(a.checkpoint);
    fs::create_directories(a.out);
    std::size_t m = params.bank.groups, n = params.bank.side;

    // the canonical filter as the network applies it: masked to the disc
    std::vector<Tensor> masked;
    for (const Tensor& f : params.bank.canonical) masked.push_back(disc_mask(f));

    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < m; ++i) {
        std::string path = a.out + "/filter_" + std::to_string(i) + ".pgm";
        save_pgm(normalize_for_export(masked[i]), path);
        outputs.push_back(path);
    }
    if (a.rotations > 0) {
        const auto& ops = rotation_operator_set(n, a.rotations);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t r = 0; r < a.rotations; ++r) {
                Tensor rotated = rotate_filter(ops[r], params.bank.canonical[i]);
                std::string path = a.out + "/filter_" + std::to_string(i) + "_rot_" +
                                   std::to_string(r) + ".pgm";
                save_pgm(normalize_for_export(rotated), path);
                outputs.push_back(path);
            }
        }
    }

    // tiled contact sheet with 1-pixel separators
    std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    std::size_t rows = (m + cols - 1) / cols;
    Tensor sheet({rows * (n + 1) + 1, cols * (n + 1) + 1}, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        Tensor img = normalize_for_export(masked[i]);
        std::size_t r0 = (i / cols) * (n + 1) + 1, c0 = (i % cols) * (n + 1) + 1;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) sheet(r0 + r, c0 + c) = img(r, c);
    }
    std::string sheet_path = a.out + "/contact_sheet.pgm";
    save_pgm(sheet, sheet_path);
    outputs.push_back(sheet_path);

    json config = {{"checkpoint", a.checkpoint}, {"rotations", a.rotations}};
    write_manifest(a.out, "export-filters", config, {a.checkpoint}, "", outputs);
    std::cout << "exported " << m << " filters to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    DataArgs data;
    std::string sizes = "10";
    std::string arches = "rotatable,standard";
    std::size_t groups = 6;
    std::size_t rotations = 16;
    std::size_t filters = 6;
    std::size_t side = 15;
    std::size_t r_eval = 21;
    std::string grid = "4x4";
    double lr = 0.01;
    double momentum = 0.9;
    double dropout = 0.2;
    double decay2 = 0.1;
    std::size_t batch = 12;
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    bool augment_standard = false;  // rotation augmentation for the standard arch
    std::uint64_t seed = 7;
    unsigned threads = default_thread_count();
    std::string out = "out/bench";
};

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (cell.empty()) continue;
        sizes.push_back(std::stoul(cell));
    }
    if (sizes.empty()) throw ConfigError("--sizes must list at least one training size");
    return sizes;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> names;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (!cell.empty()) names.push_back(cell);
    }
    return names;
}

// First `per_class` samples of every class, in dataset order.
DatasetSplit take_per_class(const DatasetSplit& split, std::size_t per_class) {
    DatasetSplit out;
    out.class_count = split.class_count;
    std::vector<std::size_t> taken(split.class_count, 0);
    for (std::size_t i = 0; i < split.size(); ++i) {
        std::size_t cls = split.labels[i];
        if (taken[cls] >= per_class) continue;
        ++taken[cls];
        out.images.push_back(split.images[i]);
        out.labels.push_back(split.labels[i]);
        out.names.push_back(split.names[i]);
    }
    for (std::size_t c = 0; c < split.class_count; ++c) {
        if (taken[c] < per_class) {
            throw ConfigError("bench: class " + std::to_string(c) + " has only " +
                              std::to_string(taken[c]) + " samples, needs " +
                              std::to_string(per_class));
        }
    }
    return out;
}

struct BenchRow {
    std::string arch;
    std::size_t train_size;
    double softmax_acc;
    double pipeline_acc;
};

BenchRow bench_one(const std::string& arch, std::size_t size, const DatasetSplit& train_split,
                   const DatasetSplit& val_split, const DatasetSplit& test_split,
                   const BenchArgs& a) {
    TrainConfig config;
    config.learning_rate = a.lr;
    config.momentum = a.momentum;
    config.dropout_rate = a.dropout;
    config.weight_decay_phase2 = a.decay2;
    config.batch_size = a.batch;
    config.max_epochs = a.max_epochs;
    config.patience = a.patience;
    config.seed = a.seed;
    config.side = a.side;
    config.threads = a.threads;
    GridSpec grid = parse_grid(a.grid);
    // spatial pooling of the training head stays at 2x2; `grid` drives extraction
    config.pool_rows = 2;
    config.pool_cols = 2;
    if (arch == "rotatable") {
        config.groups = a.groups;
        config.rotations = a.rotations;
        config.augment_rotations = false;
    } else {
        config.groups = a.filters;
        config.rotations = 1;
        config.augment_rotations = a.augment_standard;
    }
    const Tensor& sample = train_split.images.front();
    config.crop = auto_crop(sample.rows(), sample.cols(), a.side);
    config.validate();

    std::mt19937_64 rng(a.seed);
    NetworkParams params = NetworkParams::random_init(config.groups, config.rotations, config.side,
                                                      train_split.class_count, config.pool_rows,
                                                      config.pool_cols, 0.01, rng);
    train(params, train_split, val_split, config);

    RotatedBank eval_bank(params.bank, params.bank.rotations);
    BenchRow row;
    row.arch = arch;
    row.train_size = size;
    row.softmax_acc = evaluate_accuracy(params, eval_bank, test_split, config);

    // descriptor + 1-NN pipeline: local+global features, columns standardized
    // on the training set, cityblock distance
    std::size_t r_eval = arch == "rotatable" ? a.r_eval : 1;
    FeatureMatrix train_features = extract_feature_matrix(
        train_split, params.bank, r_eval, grid.rows, grid.cols, FeatureBlock::kBoth,
        params.input_mean, params.input_std, CorrMethod::kAuto, a.threads);
    FeatureMatrix test_features = extract_feature_matrix(
        test_split, params.bank, r_eval, grid.rows, grid.cols, FeatureBlock::kBoth,
        params.input_mean, params.input_std, CorrMethod::kAuto, a.threads);
    DataMatrix train_matrix = DataMatrix::from_rows(train_features.rows);
    DataMatrix test_matrix = DataMatrix::from_rows(test_features.rows);
    standardize_columns(train_matrix, test_matrix);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_matrix.rows; ++i) {
        std::vector<double> query(test_matrix.values.begin() + i * test_matrix.cols,
                                  test_matrix.values.begin() + (i + 1) * test_matrix.cols);
        if (knn1_cityblock(train_matrix, train_features.labels, query) ==
            test_features.labels[i]) {
            ++correct;
        }
    }
    row.pipeline_acc = static_cast<double>(correct) / static_cast<double>(test_matrix.rows);
    return row;
}

int cmd_bench(const BenchArgs& a) {
    std::vector<std::size_t> sizes = parse_size_list(a.sizes);
    std::vector<std::string> arches = parse_name_list(a.arches);
    if (arches.empty()) throw ConfigError("--arches must list at least one architecture");
    for (const std::string& arch : arches) {
        if (arch != "rotatable" && arch != "standard") {
            throw ConfigError("unknown arch in --arches: " + arch);
        }
    }

    std::size_t max_size = *std::max_element(sizes.begin(), sizes.end());
    DatasetSplit pool, val_split, test_split;
    if (!a.data.synth.empty() && a.data.problem_dir.empty()) {
        SynthSet set = resolve_synth_set(a.data.synth);
        pool = make_synth_split(set, max_size, 0.0, a.seed * 2654435761ull + 1);
        // synthetic data is free: validation comes from fresh fixed-orientation draws
        val_split = make_synth_split(set, 2, 0.0, a.seed * 2654435761ull + 3);
        test_split = make_synth_split(set, a.data.synth_test, -1.0, a.seed * 2654435761ull + 2);
    } else if (!a.data.problem_dir.empty() && a.data.synth.empty()) {
        Problem problem = load_problem(a.data.problem_dir);
        test_split = std::move(problem.test);
        DatasetSplit rest;
        // validation drawn once from samples beyond the largest training subset
        DatasetSplit full = std::move(problem.train);
        holdout_split(full, 0.02, a.seed, rest, val_split);
        pool = std::move(rest);
    } else {
        throw ConfigError("exactly one of --data and --synth is required");
    }

    fs::create_directories(a.out);
    std::ostringstream csv;
    csv << "arch,train_size,softmax_acc,pipeline_acc\n";
    for (std::size_t size : sizes) {
        DatasetSplit train_split = take_per_class(pool, size);
        for (const std::string& arch : arches) {
            BenchRow row = bench_one(arch, size, train_split, val_split, test_split, a);
            csv << row.arch << "," << row.train_size << "," << row.softmax_acc << ","
                << row.pipeline_acc << "\n";
            std::cout << row.arch << " @ " << row.train_size << "/class: softmax "
                      << row.softmax_acc * 100.0 << "%, descriptors+1nn "
                      << row.pipeline_acc * 100.0 << "%\n";
        }
    }
    std::string table = a.out + "/bench.csv";
    write_text_file(table, csv.str());

    json config = {{"sizes", a.sizes},       {"arches", a.arches},   {"groups", a.groups},
                   {"rotations", a.rotations}, {"filters", a.filters}, {"side", a.side},
                   {"r_eval", a.r_eval},     {"grid", a.grid},       {"lr", a.lr},
                   {"batch", a.batch},       {"max_epochs", a.max_epochs},
                   {"patience", a.patience}, {"seed", a.seed}};
    std::vector<std::string> inputs;
    if (!a.data.problem_dir.empty()) inputs.push_back(a.data.problem_dir);
    if (!a.data.synth.empty()) inputs.push_back("synth:" + a.data.synth);
    write_manifest(a.out, "bench", config, inputs, hex64(dataset_hash(test_split)), {table});
    std::cout << "wrote " << table << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotation-invariant texture features via rotatable filter banks"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_data_flags(train_cmd, train_args.data);
    train_cmd->add_option("--arch", train_args.arch, "rotatable or standard");
    train_cmd->add_option("--M", train_args.groups, "rotation groups (rotatable arch)");
    train_cmd->add_option("--R", train_args.rotations, "orientations per group");
    train_cmd->add_option("--filters", train_args.filters, "filter count (standard arch)");
    train_cmd->add_option("--n", train_args.side, "filter side in pixels (odd)");
    train_cmd->add_option("--crop", train_args.crop, "training crop side (0 = auto)");
    train_cmd->add_option("--pool", train_args.grid, "spatial max-pool grid, e.g. 2x2");
    train_cmd->add_option("--lr", train_args.lr, "learning rate");
    train_cmd->add_option("--momentum", train_args.momentum, "SGD momentum");
    train_cmd->add_option("--dropout", train_args.dropout, "filter dropout rate");
    train_cmd->add_option("--decay2", train_args.decay2, "phase-2 weight decay");
    train_cmd->add_option("--batch", train_args.batch, "batch size");
    train_cmd->add_option("--max-epochs", train_args.max_epochs, "epoch cap");
    train_cmd->add_option("--patience", train_args.patience, "phase-3 patience in epochs");
    train_cmd->add_option("--holdout", train_args.holdout, "validation holdout fraction");
    train_cmd->add_option("--seed", train_args.seed, "RNG seed");
    train_cmd->add_flag("--augment-rotations", train_args.augment,
                        "random rotation per image per epoch");
    train_cmd->add_option("--threads", train_args.threads, "worker thread cap");
    train_cmd->add_option("--out", train_args.out, "output directory");

    ExtractArgs extract_args;
    CLI::App* extract_cmd = app.add_subcommand("extract", "extract feature vectors");
    extract_cmd->add_option("--checkpoint", extract_args.checkpoint, "model checkpoint");
    extract_cmd->add_option("--data", extract_args.data_dir, "problem directory");
    extract_cmd->add_option("--split", extract_args.split, "train, test or both");
    extract_cmd->add_option("--R-eval", extract_args.r_eval, "orientations at extraction");
    extract_cmd->add_option("--grid", extract_args.grid, "extraction max-pool grid");
    extract_cmd->add_option("--block", extract_args.block, "local, global or both");
    extract_cmd->add_option("--threads", extract_args.threads, "worker thread cap");
    extract_cmd->add_option("--out", extract_args.out, "output directory");

    ClassifyArgs classify_args;
    CLI::App* classify_cmd = app.add_subcommand("classify", "classify feature vectors");
    classify_cmd->add_option("--train-features", classify_args.train_features, "training features");
    classify_cmd->add_option("--test-features", classify_args.test_features, "test features");
    classify_cmd->add_option("--clf", classify_args.clf, "lda, 1nn or softmax");
    classify_cmd->add_option("--pca", classify_args.pca, "PCA dimension (0 = none)");
    classify_cmd->add_option("--metric", classify_args.metric, "1nn distance metric");
    classify_cmd->add_flag("--standardize", classify_args.standardize,
                           "z-score feature columns on the training set first");
    classify_cmd->add_option("--checkpoint", classify_args.checkpoint, "checkpoint (softmax)");
    classify_cmd->add_option("--data", classify_args.data_dir, "problem directory (softmax)");
    classify_cmd->add_option("--threads", classify_args.threads, "worker thread cap");
    classify_cmd->add_option("--out", classify_args.out, "output directory");

    GradcheckArgs gradcheck_args;
    CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck_cmd->add_option("--eps", gradcheck_args.eps, "finite-difference step");
    gradcheck_cmd->add_option("--M", gradcheck_args.groups, "rotation groups");
    gradcheck_cmd->add_option("--R", gradcheck_args.rotations, "orientations per group");
    gradcheck_cmd->add_option("--n", gradcheck_args.side, "filter side");
    gradcheck_cmd->add_option("--C", gradcheck_args.classes, "class count");
    gradcheck_cmd->add_option("--size", gradcheck_args.image_size, "input image side");
    gradcheck_cmd->add_option("--batch", gradcheck_args.batch, "batch size");
    gradcheck_cmd->add_option("--seed", gradcheck_args.seed, "RNG seed");
    gradcheck_cmd->add_option("--threshold", gradcheck_args.threshold, "max relative error");
    gradcheck_cmd->add_flag("--corrupt-backward", gradcheck_args.corrupt,
                            "test hook: corrupt the analytic gradient")
        ->group("");  // hidden
    gradcheck_cmd->add_option("--out", gradcheck_args.out, "output directory");

    ExportArgs export_args;
    CLI::App* export_cmd = app.add_subcommand("export-filters", "write filters as PGM images");
    export_cmd->add_option("--checkpoint", export_args.checkpoint, "model checkpoint");
    export_cmd->add_option("--rotations", export_args.rotations,
                           "also export this many rotated copies per filter");
    export_cmd->add_option("--out", export_args.out, "output directory");

    BenchArgs bench_args;
    CLI::App* bench_cmd = app.add_subcommand("bench", "accuracy vs training-set size");
    add_data_flags(bench_cmd, bench_args.data);
    bench_cmd->add_option("--sizes", bench_args.sizes, "training sizes per class, e.g. 1,5,20");
    bench_cmd->add_option("--arches", bench_args.arches, "architectures to compare");
    bench_cmd->add_option("--M", bench_args.groups, "rotation groups (rotatable)");
    bench_cmd->add_option("--R", bench_args.rotations, "orientations per group");
    bench_cmd->add_option("--filters", bench_args.filters, "filter count (standard)");
    bench_cmd->add_option("--n", bench_args.side, "filter side");
    bench_cmd->add_option("--R-eval", bench_args.r_eval, "orientations at extraction");
    bench_cmd->add_option("--grid", bench_args.grid, "extraction max-pool grid");
    bench_cmd->add_option("--lr", bench_args.lr, "learning rate");
    bench_cmd->add_option("--momentum", bench_args.momentum, "SGD momentum");
    bench_cmd->add_option("--dropout", bench_args.dropout, "dropout rate");
    bench_cmd->add_option("--decay2", bench_args.decay2, "phase-2 weight decay");
    bench_cmd->add_option("--batch", bench_args.batch, "batch size");
    bench_cmd->add_option("--max-epochs", bench_args.max_epochs, "epoch cap");
    bench_cmd->add_option("--patience", bench_args.patience, "phase-3 patience");
    bench_cmd->add_flag("--augment-standard", bench_args.augment_standard,
                        "rotation augmentation for the standard arch");
    bench_cmd->add_option("--seed", bench_args.seed, "RNG seed");
    bench_cmd->add_option("--threads", bench_args.threads, "worker thread cap");
    bench_cmd->add_option("--out", bench_args.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (extract_cmd->parsed()) return cmd_extract(extract_args);
        if (classify_cmd->parsed()) return cmd_classify(classify_args);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_args);
        if (export_cmd->parsed()) return cmd_export_filters(export_args);
        if (bench_cmd->parsed()) return cmd_bench(bench_args);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IngestError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const StateError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
