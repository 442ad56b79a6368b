/**
 * @file stream_io.hpp
 * @brief Feature files, offline min-max normalization, label masking,
 * seeded shuffling and synthetic cluster generation.
 *
 * Binary layout (little-endian):
 *
 *   "LPFT" | u32 version = 1 | u64 sample count | u32 d | u32 class count
 *   then per sample: i32 label (-1 = unlabeled) | d x f32 features
 *
 * The CSV variant has one sample per line: `label,f0,...,f{d-1}`.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "lpart_model.hpp"

namespace lpart {

struct FeatureSample {
    std::optional<ClassIndex> label;  // nullopt is stored as -1
    std::vector<float> features;

    friend bool operator==(const FeatureSample&, const FeatureSample&) = default;
};

struct FeatureSet {
    std::uint32_t dim = 0;
    std::uint32_t num_classes = 0;
    std::vector<FeatureSample> samples;

    std::size_t labeled_count() const {
        return static_cast<std::size_t>(
            std::count_if(samples.begin(), samples.end(), [](const FeatureSample& s) { return s.label.has_value(); }));
    }

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct FeatureHeader {
    std::uint64_t count = 0;
    std::uint32_t dim = 0;
    std::uint32_t num_classes = 0;
};

inline constexpr std::string_view kFeatureMagic = "LPFT";
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 4 + 4 + 8 + 4 + 4;

// Whether feature values must already be normalized to [0,1].
enum class RangeCheck { kUnitInterval, kFiniteOnly };

// ---------------------------------------------------------------------------
// Seeded randomness. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; draws are derived from raw engine output so that
// results do not depend on the standard library's distribution internals.

namespace rng_stream {
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kMask = 2;
inline constexpr std::uint64_t kSynthCenters = 3;
inline constexpr std::uint64_t kSynthSamples = 4;
}  // namespace rng_stream

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection of the biased tail.
inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t v = eng();
        if (v < limit) return v % n;
    }
}

// ---------------------------------------------------------------------------
// Binary reader/writer

namespace detail {

inline void validate_sample(const FeatureSample& s, std::uint32_t dim, std::uint32_t num_classes, RangeCheck check,
                            std::size_t offset) {
    if (s.label && *s.label >= num_classes)
        throw FormatError("label " + std::to_string(*s.label) + " out of range for " + std::to_string(num_classes) +
                              " classes",
                          offset);
    if (s.features.size() != dim)
        throw FormatError("sample has " + std::to_string(s.features.size()) + " features, expected " +
                              std::to_string(dim),
                          offset);
    for (float v : s.features) {
        if (!std::isfinite(v)) throw FormatError("non-finite feature value", offset);
        if (check == RangeCheck::kUnitInterval && !(v >= 0.0f && v <= 1.0f))
            throw FormatError("feature value " + std::to_string(v) + " outside [0, 1]", offset);
    }
}

inline bool has_csv_extension(const std::filesystem::path& p) { return p.extension() == ".csv"; }

}  // namespace detail

/// Sequential reader holding one record in memory at a time.
class FeatureReader {
public:
    explicit FeatureReader(const std::filesystem::path& path, RangeCheck check = RangeCheck::kUnitInterval)
        : in_(path, std::ios::binary), check_(check) {
        if (!in_) throw IoError("cannot open feature file " + path.string());
        std::vector<std::uint8_t> buf(kFeatureHeaderBytes);
        in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        buf.resize(static_cast<std::size_t>(in_.gcount()));
        ByteReader r(buf);
        r.expect_magic(kFeatureMagic);
        if (const auto v = r.get_u32(); v != kFeatureVersion)
            throw FormatError("unsupported LPFT version " + std::to_string(v), 4);
        header_.count = r.get_u64();
        header_.dim = r.get_u32();
        header_.num_classes = r.get_u32();
        if (header_.dim == 0) throw FormatError("feature dimension must be >= 1", 16);
        record_.resize(4 + 4 * static_cast<std::size_t>(header_.dim));
        offset_ = kFeatureHeaderBytes;
    }

    const FeatureHeader& header() const { return header_; }

    /// Next sample, or nullopt after the last one. Trailing bytes are a format error.
    std::optional<FeatureSample> next() {
        if (read_ == header_.count) {
            if (in_.peek() != std::char_traits<char>::eof()) throw FormatError("unexpected trailing bytes", offset_);
            return std::nullopt;
        }
        in_.read(reinterpret_cast<char*>(record_.data()), static_cast<std::streamsize>(record_.size()));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != record_.size())
            throw FormatError("truncated file: record " + std::to_string(read_) + " of " +
                                  std::to_string(header_.count),
                              offset_ + got);
        ByteReader r(record_, offset_);
        FeatureSample s;
        const std::int32_t label = r.get_i32();
        if (label < -1) throw FormatError("invalid label " + std::to_string(label), offset_);
        if (label >= 0) s.label = static_cast<ClassIndex>(label);
        s.features.resize(header_.dim);
        for (auto& v : s.features) v = r.get_f32();
        detail::validate_sample(s, header_.dim, header_.num_classes, check_, offset_);
        offset_ += record_.size();
        ++read_;
        return s;
    }

private:
    std::ifstream in_;
    RangeCheck check_;
    FeatureHeader header_;
    std::vector<std::uint8_t> record_;
    std::size_t offset_ = 0;
    std::uint64_t read_ = 0;
};

/// Streams records to disk; the sample count in the header is patched on close().
class FeatureWriter {
public:
    FeatureWriter(const std::filesystem::path& path, std::uint32_t dim, std::uint32_t num_classes)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path), dim_(dim), num_classes_(num_classes) {
        if (!out_) throw IoError("cannot write feature file " + path.string());
        if (dim_ == 0) throw DomainError("feature dimension must be >= 1");
        ByteWriter w;
        w.put_magic(kFeatureMagic);
        w.put_u32(kFeatureVersion);
        w.put_u64(0);
        w.put_u32(dim_);
        w.put_u32(num_classes_);
        flush(w);
    }

    FeatureWriter(const FeatureWriter&) = delete;
    FeatureWriter& operator=(const FeatureWriter&) = delete;
    ~FeatureWriter() {
        try {
            close();
        } catch (...) {
        }
    }

    void write(const FeatureSample& s) {
        detail::validate_sample(s, dim_, num_classes_, RangeCheck::kFiniteOnly, 0);
        ByteWriter w;
        w.put_i32(s.label ? static_cast<std::int32_t>(*s.label) : -1);
        for (float v : s.features) w.put_f32(v);
        flush(w);
        ++count_;
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        ByteWriter w;
        w.put_u64(count_);
        out_.seekp(8);
        flush(w);
        out_.close();
        if (!out_) throw IoError("failed writing feature file " + path_.string());
    }

private:
    void flush(const ByteWriter& w) {
        out_.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
        if (!out_) throw IoError("failed writing feature file " + path_.string());
    }

    std::ofstream out_;
    std::filesystem::path path_;
    std::uint32_t dim_;
    std::uint32_t num_classes_;
    std::uint64_t count_ = 0;
    bool closed_ = false;
};

// ---------------------------------------------------------------------------
// CSV

inline FeatureSet read_csv(const std::filesystem::path& path, RangeCheck check = RangeCheck::kUnitInterval) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file " + path.string());
    FeatureSet set;
    std::string line;
    std::size_t offset = 0;
    std::int64_t max_label = -1;
    bool first = true;
    while (std::getline(in, line)) {
        const std::size_t line_at = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2) throw FormatError("CSV row needs a label and at least one feature", line_at);
        FeatureSample s;
        try {
            std::size_t used = 0;
            const long long label = std::stoll(cells[0], &used);
            if (used != cells[0].size() || label < -1) throw FormatError("invalid label " + cells[0], line_at);
            if (label >= 0) {
                s.label = static_cast<ClassIndex>(label);
                max_label = std::max<std::int64_t>(max_label, label);
            }
            for (std::size_t i = 1; i < cells.size(); ++i) {
                s.features.push_back(std::stof(cells[i], &used));
                if (used != cells[i].size()) throw FormatError("invalid feature value " + cells[i], line_at);
            }
        } catch (const std::logic_error&) {
            throw FormatError("unparseable CSV row", line_at);
        }
        if (first) {
            set.dim = static_cast<std::uint32_t>(s.features.size());
            first = false;
        }
        detail::validate_sample(s, set.dim, std::numeric_limits<std::uint32_t>::max(), check, line_at);
        set.samples.push_back(std::move(s));
    }
    set.num_classes = static_cast<std::uint32_t>(max_label + 1);
    return set;
}

inline void write_csv(const std::filesystem::path& path, const FeatureSet& set) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write CSV file " + path.string());
    out.precision(9);  // round-trips float32
    for (const auto& s : set.samples) {
        out << (s.label ? static_cast<long long>(*s.label) : -1LL);
        for (float v : s.features) out << ',' << v;
        out << '\n';
    }
    if (!out) throw IoError("failed writing CSV file " + path.string());
}

// ---------------------------------------------------------------------------
// Whole-file helpers. Paths ending in ".csv" use the CSV variant.

inline FeatureSet read_stream(const std::filesystem::path& path, RangeCheck check = RangeCheck::kUnitInterval) {
    if (detail::has_csv_extension(path)) return read_csv(path, check);
    FeatureReader reader(path, check);
    FeatureSet set;
    set.dim = reader.header().dim;
    set.num_classes = reader.header().num_classes;
    // Cap the reservation: the header count is untrusted until the records are read.
    set.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(reader.header().count, 1u << 20)));
    while (auto s = reader.next()) set.samples.push_back(std::move(*s));
    return set;
}

inline void write_stream(const std::filesystem::path& path, const FeatureSet& set) {
    for (const auto& s : set.samples)
        if (s.features.size() != set.dim)
            throw DomainError("write_stream: sample dimension " + std::to_string(s.features.size()) +
                              " differs from set dimension " + std::to_string(set.dim));
    if (detail::has_csv_extension(path)) return write_csv(path, set);
    FeatureWriter writer(path, set.dim, set.num_classes);
    for (const auto& s : set.samples) writer.write(s);
    writer.close();
}

// ---------------------------------------------------------------------------
// Normalization

struct DimensionRange {
    double min = 0.0;
    double max = 0.0;
};

/// Per-dimension min/max over a set.
inline std::vector<DimensionRange> feature_ranges(const FeatureSet& set) {
    std::vector<DimensionRange> ranges(set.dim, {std::numeric_limits<double>::infinity(),
                                                 -std::numeric_limits<double>::infinity()});
    for (const auto& s : set.samples)
        for (std::size_t i = 0; i < set.dim; ++i) {
            ranges[i].min = std::min<double>(ranges[i].min, s.features[i]);
            ranges[i].max = std::max<double>(ranges[i].max, s.features[i]);
        }
    return ranges;
}

/// (x - min) / (max - min), clipped to [0,1]; constant dimensions map to 0.5.
inline float rescale(float x, const DimensionRange& r) {
    if (!(r.max > r.min)) return 0.5f;
    const double v = (static_cast<double>(x) - r.min) / (r.max - r.min);
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

inline void apply_ranges(FeatureSet& set, std::span<const DimensionRange> ranges) {
    if (ranges.size() != set.dim) throw StructuralError("apply_ranges: range count does not match dimension");
    for (auto& s : set.samples)
        for (std::size_t i = 0; i < set.dim; ++i) s.features[i] = rescale(s.features[i], ranges[i]);
}

/// Two passes over `path_in`: gather per-dimension ranges, then write the rescaled file.
/// CSV files are handled in memory.
inline std::vector<DimensionRange> normalize(const std::filesystem::path& path_in,
                                             const std::filesystem::path& path_out) {
    if (detail::has_csv_extension(path_in) || detail::has_csv_extension(path_out)) {
        auto set = read_stream(path_in, RangeCheck::kFiniteOnly);
        auto ranges = feature_ranges(set);
        apply_ranges(set, ranges);
        write_stream(path_out, set);
        return ranges;
    }
    std::vector<DimensionRange> ranges;
    FeatureHeader header;
    {
        FeatureReader pass1(path_in, RangeCheck::kFiniteOnly);
        header = pass1.header();
        ranges.assign(header.dim, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
        while (auto s = pass1.next())
            for (std::size_t i = 0; i < header.dim; ++i) {
                ranges[i].min = std::min<double>(ranges[i].min, s->features[i]);
                ranges[i].max = std::max<double>(ranges[i].max, s->features[i]);
            }
    }
    FeatureReader pass2(path_in, RangeCheck::kFiniteOnly);
    FeatureWriter writer(path_out, header.dim, header.num_classes);
    while (auto s = pass2.next()) {
        for (std::size_t i = 0; i < header.dim; ++i) s->features[i] = rescale(s->features[i], ranges[i]);
        writer.write(*s);
    }
    writer.close();
    return ranges;
}

// ---------------------------------------------------------------------------
// Stream transforms

struct MaskSchedule {
    double label_rate = 1.0;
    std::uint64_t seed = 0;
};

/// Each labeled sample keeps its label independently with probability label_rate.
inline FeatureSet mask_labels(FeatureSet set, const MaskSchedule& schedule) {
    if (!(schedule.label_rate >= 0.0 && schedule.label_rate <= 1.0))
        throw DomainError("label_rate must lie in [0, 1], got " + std::to_string(schedule.label_rate));
    auto eng = make_engine(schedule.seed, rng_stream::kMask);
    for (auto& s : set.samples) {
        // One draw per sample regardless of label so the mask of sample i depends only on (seed, i).
        const double u = uniform01(eng);
        if (s.label && !(u < schedule.label_rate)) s.label.reset();
    }
    return set;
}

/// Fisher-Yates: for i = n-1 down to 1, swap(i, uniform_below(i + 1)).
inline FeatureSet shuffle(FeatureSet set, std::uint64_t seed) {
    auto eng = make_engine(seed, rng_stream::kShuffle);
    auto& v = set.samples;
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
    return set;
}

inline FeatureSet drop_unlabeled(FeatureSet set) {
    std::erase_if(set.samples, [](const FeatureSample& s) { return !s.label.has_value(); });
    return set;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian blobs

struct SynthSpec {
    std::uint32_t num_classes = 10;
    std::uint32_t dim = 10;
    std::uint32_t samples_per_class = 500;
    double spread = 0.05;
    std::uint64_t seed = 0;
};

struct SynthSplit {
    FeatureSet train;
    FeatureSet test;
    std::vector<std::vector<double>> centers;
};

/// Class centers in [0.2, 0.8]^d, one isotropic Gaussian blob per class,
/// values clipped to [0,1]. Samples are emitted class by class.
inline SynthSplit synth_split(const SynthSpec& spec, std::uint32_t test_per_class) {
    if (spec.num_classes == 0 || spec.dim == 0) throw DomainError("synth: classes and dimension must be >= 1");
    if (!(spec.spread > 0.0) || !std::isfinite(spec.spread)) throw DomainError("synth: spread must be > 0");

    SynthSplit out;
    auto centers_eng = make_engine(spec.seed, rng_stream::kSynthCenters);
    out.centers.assign(spec.num_classes, std::vector<double>(spec.dim));
    for (auto& c : out.centers)
        for (auto& v : c) v = 0.2 + 0.6 * uniform01(centers_eng);

    auto sample_eng = make_engine(spec.seed, rng_stream::kSynthSamples);
    std::normal_distribution<double> noise(0.0, spec.spread);
    auto draw = [&](FeatureSet& set, std::uint32_t per_class) {
        set.dim = spec.dim;
        set.num_classes = spec.num_classes;
        set.samples.reserve(static_cast<std::size_t>(per_class) * spec.num_classes);
        for (ClassIndex y = 0; y < spec.num_classes; ++y)
            for (std::uint32_t n = 0; n < per_class; ++n) {
                FeatureSample s;
                s.label = y;
                s.features.resize(spec.dim);
                for (std::size_t i = 0; i < spec.dim; ++i)
                    s.features[i] = static_cast<float>(std::clamp(out.centers[y][i] + noise(sample_eng), 0.0, 1.0));
                set.samples.push_back(std::move(s));
            }
    };
    draw(out.train, spec.samples_per_class);
    draw(out.test, test_per_class);
    return out;
}

inline FeatureSet synth_clusters(const SynthSpec& spec) { return synth_split(spec, 0).train; }

/// Feature vector widened to double for the models.
inline std::vector<double> to_double(const FeatureSample& s) {
    return std::vector<double>(s.features.begin(), s.features.end());
}

}  // namespace lpart
