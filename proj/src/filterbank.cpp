#include "rotex/filterbank.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "rotex/errors.hpp"
#include "rotex/serialize.hpp"

namespace rotex {

FilterBank FilterBank::random_init(std::size_t groups, std::size_t rotations, std::size_t side,
                                   double stddev, std::mt19937_64& rng) {
    if (groups == 0 || rotations == 0) throw ConfigError("filter bank needs M >= 1 and R >= 1");
    if (side < 3 || side % 2 == 0) throw ConfigError("filter side must be odd and >= 3");
    FilterBank bank;
    bank.groups = groups;
    bank.rotations = rotations;
    bank.side = side;
    std::normal_distribution<double> dist(0.0, stddev);
    for (std::size_t i = 0; i < groups; ++i) {
        Tensor f({side, side});
        for (std::size_t j = 0; j < f.size(); ++j) f(j) = dist(rng);
        bank.canonical.push_back(std::move(f));
    }
    bank.biases.assign(groups, 0.0);
    return bank;
}

void FilterBank::validate() const {
    if (groups == 0 || canonical.size() != groups || biases.size() != groups) {
        throw ConfigError("filter bank: inconsistent group count");
    }
    if (side < 3 || side % 2 == 0) throw ConfigError("filter bank: filter side must be odd >= 3");
    if (rotations == 0) throw ConfigError("filter bank: R must be >= 1");
    for (const Tensor& f : canonical) {
        if (f.rank() != 2 || f.rows() != side || f.cols() != side) {
            throw ShapeError("filter bank: canonical filter shape mismatch");
        }
        f.require_finite("filter bank canonical");
    }
    for (double b : biases) {
        if (!std::isfinite(b)) throw NumericError("filter bank: non-finite bias");
    }
}

const std::vector<RotationOperator>& rotation_operator_set(std::size_t n, std::size_t r_eval) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::vector<RotationOperator>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(n, r_eval);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<RotationOperator> ops;
    ops.reserve(r_eval);
    for (std::size_t a = 0; a < r_eval; ++a) {
        double angle = 2.0 * M_PI * static_cast<double>(a) / static_cast<double>(r_eval);
        ops.push_back(make_rotation_operator(n, angle));
    }
    return cache.emplace(key, std::move(ops)).first->second;
}

RotatedBank::RotatedBank(const FilterBank& bank, std::size_t r_eval)
    : groups_(bank.groups), r_eval_(r_eval), side_(bank.side), biases_(bank.biases) {
    if (r_eval == 0) throw ConfigError("R_eval must be >= 1");
    bank.validate();
    ops_ = rotation_operator_set(side_, r_eval);
    filters_.reserve(groups_ * r_eval_);
    for (std::size_t i = 0; i < groups_; ++i) {
        for (std::size_t a = 0; a < r_eval_; ++a) {
            filters_.push_back(rotate_filter(ops_[a], bank.canonical[i]));
        }
    }
}

double RotatedBank::angle(std::size_t a) const {
    return 2.0 * M_PI * static_cast<double>(a) / static_cast<double>(r_eval_);
}

const Spectrum& RotatedBank::filter_spectrum(std::size_t group, std::size_t a, std::size_t rows,
                                             std::size_t cols) const {
    if (rows < side_ || cols < side_) throw ShapeError("filter spectrum: image smaller than filter");
    if (rows != spec_rows_ || cols != spec_cols_ || spectra_.empty()) {
        spectra_.clear();
        spectra_.reserve(filters_.size());
        for (const Tensor& f : filters_) spectra_.push_back(fft2(pad_to(f, rows, cols)));
        spec_rows_ = rows;
        spec_cols_ = cols;
    }
    return spectra_[group * r_eval_ + a];
}

namespace {
constexpr char kBankMagic[8] = {'R', 'O', 'T', 'B', 'A', 'N', 'K', '1'};
}

void save_filter_bank(const FilterBank& bank, const std::string& path) {
    bank.validate();
    BinaryWriter w(path);
    w.magic(kBankMagic);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(bank.groups));
    w.u32(static_cast<std::uint32_t>(bank.rotations));
    w.u32(static_cast<std::uint32_t>(bank.side));
    for (const Tensor& f : bank.canonical) w.f64_block(f.values());
    w.f64_block(bank.biases);
    w.close();

    nlohmann::json meta = {
        {"magic", "ROTBANK1"}, {"version", 1},         {"groups", bank.groups},
        {"rotations", bank.rotations}, {"side", bank.side},
    };
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

FilterBank load_filter_bank(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kBankMagic);
    std::uint32_t version = r.u32();
    if (version != 1) throw IngestError(path + ": unsupported filter bank version");
    FilterBank bank;
    bank.groups = r.u32();
    bank.rotations = r.u32();
    bank.side = r.u32();
    for (std::size_t i = 0; i < bank.groups; ++i) {
        bank.canonical.push_back(
            Tensor::from_values({bank.side, bank.side}, r.f64_block(bank.side * bank.side)));
    }
    bank.biases = r.f64_block(bank.groups);
    bank.validate();
    return bank;
}

}  // namespace rotex
