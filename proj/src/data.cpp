#include "rotex/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rotex/errors.hpp"
#include "rotex/serialize.hpp"

namespace rotex {

void DatasetSplit::validate() const {
    if (images.size() != labels.size() || images.size() != names.size()) {
        throw IngestError("dataset split: images, labels and names differ in length");
    }
    for (std::size_t label : labels) {
        if (label >= class_count) throw IngestError("dataset split: label out of range");
    }
}

namespace {

// Reads the next whitespace-separated token, skipping '#' comment lines.
std::string next_pgm_token(std::istream& in, const std::string& path) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) continue;
        token.push_back(static_cast<char>(c));
        while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
            token.push_back(static_cast<char>(in.get()));
        }
        return token;
    }
    throw IngestError(path + ": truncated PGM header");
}

std::size_t parse_pgm_number(const std::string& token, const std::string& path) {
    std::size_t value = 0;
    if (token.empty()) throw IngestError(path + ": empty PGM header field");
    for (char ch : token) {
        if (ch < '0' || ch > '9') throw IngestError(path + ": malformed PGM header field");
        value = value * 10 + static_cast<std::size_t>(ch - '0');
    }
    return value;
}

}  // namespace

Tensor load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || m1 != '5') throw IngestError(path + ": not a binary PGM (P5) file");
    std::size_t width = parse_pgm_number(next_pgm_token(in, path), path);
    std::size_t height = parse_pgm_number(next_pgm_token(in, path), path);
    std::size_t maxval = parse_pgm_number(next_pgm_token(in, path), path);
    if (maxval == 0 || maxval > 255) {
        throw IngestError(path + ": unsupported maxval " + std::to_string(maxval));
    }
    if (width == 0 || height == 0) throw IngestError(path + ": empty image");
    int sep = in.get();  // single whitespace byte between header and payload
    if (sep == EOF || !std::isspace(sep)) throw IngestError(path + ": malformed PGM header");

    std::vector<unsigned char> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw IngestError(path + ": truncated PGM payload");
    }
    Tensor out({height, width});
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out(i) = static_cast<double>(raw[i]) / static_cast<double>(maxval);
    }
    return out;
}

void save_pgm(const Tensor& image, const std::string& path) {
    image.require_rank(2, "save_pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open " + path + " for writing");
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (std::size_t i = 0; i < image.size(); ++i) {
        double v = std::clamp(image(i), 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
    }
    if (!out) throw IngestError("write to " + path + " failed");
}

DatasetSplit load_manifest(const std::string& manifest_path, const std::string& image_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw IngestError("cannot open manifest " + manifest_path);
    std::string line;
    if (!std::getline(in, line)) throw IngestError(manifest_path + ": empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t declared = 0;
    try {
        declared = std::stoul(line);
    } catch (const std::exception&) {
        throw IngestError(manifest_path + ":1: expected the sample count, got \"" + line + "\"");
    }

    DatasetSplit split;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string name;
        long label = -1;
        if (!(fields >> name >> label) || label < 0) {
            throw IngestError(manifest_path + ":" + std::to_string(line_no) +
                              ": expected \"filename label\", got \"" + line + "\"");
        }
        std::string extra;
        if (fields >> extra) {
            throw IngestError(manifest_path + ":" + std::to_string(line_no) +
                              ": trailing content \"" + extra + "\"");
        }
        split.names.push_back(name);
        split.labels.push_back(static_cast<std::size_t>(label));
        split.images.push_back(load_pgm(image_dir + "/" + name));
    }
    if (split.names.size() != declared) {
        throw IngestError(manifest_path + ": declares " + std::to_string(declared) +
                          " samples but lists " + std::to_string(split.names.size()));
    }
    if (split.names.empty()) throw IngestError(manifest_path + ": no samples");

    std::size_t max_label = *std::max_element(split.labels.begin(), split.labels.end());
    split.class_count = max_label + 1;
    std::vector<bool> seen(split.class_count, false);
    for (std::size_t l : split.labels) seen[l] = true;
    for (std::size_t c = 0; c < split.class_count; ++c) {
        if (!seen[c]) {
            throw IngestError(manifest_path + ": labels are not dense, class " +
                              std::to_string(c) + " is missing");
        }
    }
    return split;
}

Problem load_problem(const std::string& dir) {
    Problem p;
    p.train = load_manifest(dir + "/train.txt", dir + "/images");
    p.test = load_manifest(dir + "/test.txt", dir + "/images");
    if (p.test.class_count > p.train.class_count) {
        throw IngestError(dir + ": test split references classes missing from the train split");
    }
    p.test.class_count = p.train.class_count;
    return p;
}

std::uint64_t dataset_hash(const DatasetSplit& split) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    auto mix = [&h](const unsigned char* bytes, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    for (std::size_t i = 0; i < split.size(); ++i) {
        mix(reinterpret_cast<const unsigned char*>(split.names[i].data()),
            split.names[i].size());
        std::uint64_t label = split.labels[i];
        mix(reinterpret_cast<const unsigned char*>(&label), sizeof label);
        mix(reinterpret_cast<const unsigned char*>(split.images[i].data()),
            split.images[i].size() * sizeof(double));
    }
    return h;
}

Tensor synth_texture(const SynthSpec& spec) {
    if (spec.size == 0) throw ConfigError("synth_texture: size must be positive");
    if (spec.components.empty()) throw ConfigError("synth_texture: need at least one component");
    for (const WaveComponent& w : spec.components) {
        if (w.frequency <= 0.0 || w.frequency > 0.5) {
            throw ConfigError("synth_texture: frequency " + std::to_string(w.frequency) +
                              " outside (0, 0.5] cycles/pixel");
        }
    }
    std::size_t n = spec.size;
    double center = static_cast<double>(n - 1) / 2.0;
    Tensor out({n, n});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double dr = static_cast<double>(r) - center;
            double dc = static_cast<double>(c) - center;
            double v = 0.5;
            for (const WaveComponent& w : spec.components) {
                double theta = spec.orientation + w.phase;
                double proj = dr * std::cos(theta) + dc * std::sin(theta);
                // even waveform: orientations theta and theta + pi coincide
                v += w.weight * 0.4 * std::cos(2.0 * M_PI * w.frequency * proj);
            }
            out(r, c) = v;
        }
    }
    if (spec.noise_std > 0.0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.noise_std);
        for (std::size_t i = 0; i < out.size(); ++i) out(i) += noise(rng);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out(i) = std::clamp(out(i), 0.0, 1.0);
    return out;
}

std::vector<std::vector<WaveComponent>> default_synth_classes() {
    // Frequencies sit well below Nyquist: bicubic rotation of near-Nyquist
    // filters attenuates them at off-grid angles, which blurs the frequency
    // classes into each other.
    std::vector<std::vector<WaveComponent>> classes;
    for (double f : {1.0 / 5.0, 1.0 / 7.0, 1.0 / 10.0}) {
        classes.push_back({{f, 1.0, 0.0}});
        classes.push_back({{f, 0.55, 0.0}, {f, 0.55, M_PI / 2.0}});
    }
    return classes;
}

SynthSet default_synth_set() {
    SynthSet set;
    set.classes = default_synth_classes();
    set.size = 64;
    set.noise_std = 0.05;
    return set;
}

SynthSet load_synth_set(const std::string& json_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(json_path + ": " + e.what());
    }
    SynthSet set;
    try {
        set.size = doc.value("size", std::size_t{64});
        set.noise_std = doc.value("noise_std", 0.05);
        for (const auto& cls : doc.at("classes")) {
            std::vector<WaveComponent> components;
            for (const auto& comp : cls.at("components")) {
                WaveComponent w;
                w.frequency = comp.at("frequency").get<double>();
                w.weight = comp.value("weight", 1.0);
                w.phase = comp.value("phase", 0.0);
                components.push_back(w);
            }
            set.classes.push_back(std::move(components));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(json_path + ": " + e.what());
    }
    if (set.classes.size() < 2) throw IngestError(json_path + ": need at least 2 classes");
    return set;
}

DatasetSplit make_synth_split(const SynthSet& set, std::size_t per_class, double fixed_orientation,
                              std::uint64_t seed) {
    if (per_class == 0) throw ConfigError("make_synth_split: need at least 1 image per class");
    DatasetSplit split;
    split.class_count = set.classes.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform_angle(0.0, 2.0 * M_PI);
    for (std::size_t cls = 0; cls < set.classes.size(); ++cls) {
        for (std::size_t i = 0; i < per_class; ++i) {
            SynthSpec spec;
            spec.components = set.classes[cls];
            spec.size = set.size;
            spec.noise_std = set.noise_std;
            spec.orientation = fixed_orientation < 0.0 ? uniform_angle(rng) : fixed_orientation;
            spec.seed = rng();
            split.images.push_back(synth_texture(spec));
            split.labels.push_back(cls);
            split.names.push_back("synth_c" + std::to_string(cls) + "_" + std::to_string(i));
        }
    }
    split.validate();
    return split;
}

}  // namespace rotex
