#include "lvp/storage.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"
#include "lvp/errors.hpp"

namespace lvp {

namespace {

constexpr char kMagicEmbeddings[4] = {'L', 'V', 'P', 'E'};
constexpr char kMagicPool[4] = {'L', 'V', 'P', 'P'};
constexpr char kMagicParams[4] = {'L', 'V', 'P', 'A'};
constexpr char kMagicHead[4] = {'L', 'V', 'P', 'H'};

class ByteWriter {
public:
    void magic(const char (&m)[4]) { buf_.append(m, 4); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        if (s.size() > 0xFFFFFFFFu) throw InvalidInput("string too long to serialise");
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void domain(std::optional<std::uint32_t> d) {
        if (d && *d == kNoDomain) throw InvalidInput("domain id 0xFFFFFFFF is reserved");
        u32(d ? *d : kNoDomain);
    }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string_view bytes, const char* format) : bytes_(bytes), format_(format) {}

    void header(const char (&m)[4]) {
        need(4, "magic");
        if (std::memcmp(bytes_.data(), m, 4) != 0)
            throw BadMagic(std::string(format_) + ": bad magic, expected '" + std::string(m, 4) + "'");
        pos_ = 4;
        const std::uint32_t version = u32("version");
        if (version != kFormatVersion)
            throw VersionMismatch(std::string(format_) + ": unsupported version " +
                                  std::to_string(version) + " (expected " +
                                  std::to_string(kFormatVersion) + ")");
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::string str(const char* what) {
        const std::uint32_t n = u32(what);
        need(n, what);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::optional<std::uint32_t> domain(const char* what) {
        const std::uint32_t d = u32(what);
        return d == kNoDomain ? std::nullopt : std::optional<std::uint32_t>(d);
    }
    std::vector<float> floats(std::size_t n, const char* what) {
        need(n * 4, what);
        std::vector<float> v(n);
        for (auto& x : v) {
            x = f32(what);
            if (!std::isfinite(x))
                throw CorruptPayload(std::string(format_) + ": non-finite value in " + what);
        }
        return v;
    }
    void finish() const {
        if (pos_ != bytes_.size())
            throw TrailingBytes(std::string(format_) + ": " + std::to_string(bytes_.size() - pos_) +
                                " unexpected trailing bytes");
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n)
            throw Truncated(std::string(format_) + ": truncated while reading " + what + " at offset " +
                            std::to_string(pos_));
    }

    std::string_view bytes_;
    const char* format_;
    std::size_t pos_ = 0;
};

// Rewraps invariant violations found while decoding as data corruption.
template <typename Fn>
auto as_corrupt(const char* format, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidInput& e) {
        throw CorruptPayload(std::string(format) + ": " + e.what());
    }
}

}  // namespace

std::uint64_t embedding_file_size(std::uint32_t dim, std::uint64_t record_count,
                                  std::size_t namespace_bytes) {
    const std::uint64_t header = 4 + 4 + 4 + 8 + 4 + 4 + namespace_bytes;
    return header + record_count * (8 + std::uint64_t{dim} * 4);
}

std::string encode_embeddings(const EmbeddingDataset& ds) {
    if (ds.dim == 0) throw InvalidInput("dataset dimension must be >= 1");
    ByteWriter w;
    w.magic(kMagicEmbeddings);
    w.u32(kFormatVersion);
    w.u32(ds.dim);
    w.u64(ds.records.size());
    w.u32(ds.flags);
    w.str(ds.ns);
    for (const auto& r : ds.records) {
        if (r.embedding.dim() != ds.dim) throw InvalidInput("record dimension differs from dataset");
        if (r.class_id.ns != ds.ns)
            throw InvalidInput("record class " + r.class_id.to_string() + " is outside namespace " + ds.ns);
        w.u32(r.class_id.local_id);
        w.domain(r.domain_id);
        for (float x : r.embedding.values()) w.f32(x);
    }
    return w.take();
}

EmbeddingDataset decode_embeddings(std::string_view bytes) {
    ByteReader r(bytes, "LVPE");
    r.header(kMagicEmbeddings);
    EmbeddingDataset ds;
    ds.dim = r.u32("dim");
    if (ds.dim == 0) throw CorruptPayload("LVPE: dimension 0");
    const std::uint64_t count = r.u64("record count");
    ds.flags = r.u32("flags");
    ds.ns = r.str("namespace");
    const std::uint64_t record_bytes = 8 + std::uint64_t{ds.dim} * 4;
    if (count > r.remaining() / record_bytes)
        throw Truncated("LVPE: header announces " + std::to_string(count) + " records, file holds " +
                        std::to_string(r.remaining() / record_bytes));
    ds.records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t local = r.u32("class id");
        const auto domain = r.domain("domain id");
        ds.records.push_back(Record{Embedding(r.floats(ds.dim, "record")), ClassId{ds.ns, local}, domain});
    }
    r.finish();
    return ds;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingDataset& ds) {
    write_file_atomic(path, encode_embeddings(ds));
}

EmbeddingDataset read_embeddings(const std::filesystem::path& path, const ReadOptions& opts) {
    EmbeddingDataset ds = decode_embeddings(read_file(path));
    return opts.normalize ? normalized(std::move(ds)) : ds;
}

EmbeddingDataset normalized(EmbeddingDataset ds) {
    for (auto& r : ds.records) {
        const auto v = r.embedding.values();
        double ss = 0.0;
        for (float x : v) ss += static_cast<double>(x) * x;
        if (!(ss > 0.0)) throw InvalidInput("cannot normalise a zero record");
        const double inv = 1.0 / std::sqrt(ss);
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) * inv;
        r.embedding = Embedding::from_doubles(out);
    }
    ds.flags |= kFlagNormalized;
    return ds;
}

std::string encode_pool(const Pool& pool) {
    ByteWriter w;
    w.magic(kMagicPool);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(pool.dim()));
    w.u32(static_cast<std::uint32_t>(pool.class_count()));
    for (const auto& [cls, list] : pool.entries()) {
        w.str(cls.ns);
        w.u32(cls.local_id);
        w.str(pool.display_name(cls));
        w.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& lv : list) {
            w.u8(static_cast<std::uint8_t>(lv.modality));
            w.domain(lv.domain_id);
            w.u64(lv.sample_count);
            for (float x : lv.vector.values()) w.f32(x);
        }
    }
    w.u32(static_cast<std::uint32_t>(pool.provenance().size()));
    for (const auto& p : pool.provenance()) w.str(p);
    return w.take();
}

Pool decode_pool(std::string_view bytes) {
    ByteReader r(bytes, "LVPP");
    r.header(kMagicPool);
    const std::uint32_t dim = r.u32("dim");
    if (dim == 0) throw CorruptPayload("LVPP: dimension 0");
    const std::uint32_t classes = r.u32("class count");
    PoolEntries entries;
    std::map<ClassId, std::string> names;
    for (std::uint32_t k = 0; k < classes; ++k) {
        ClassId cls;
        cls.ns = r.str("class namespace");
        cls.local_id = r.u32("class id");
        std::string name = r.str("display name");
        const std::uint32_t count = r.u32("entry count");
        if (count == 0) throw CorruptPayload("LVPP: class " + cls.to_string() + " has entry count 0");
        if (entries.count(cls)) throw CorruptPayload("LVPP: duplicate class " + cls.to_string());
        if (count > r.remaining() / (13 + std::uint64_t{dim} * 4))
            throw Truncated("LVPP: class " + cls.to_string() + " announces " + std::to_string(count) +
                            " entries beyond the end of the file");
        std::vector<LabelVector> list;
        for (std::uint32_t e = 0; e < count; ++e) {
            const std::uint8_t m = r.u8("modality");
            if (m > 2) throw CorruptPayload("LVPP: unknown modality " + std::to_string(m));
            const auto domain = r.domain("domain id");
            const std::uint64_t n = r.u64("sample count");
            auto values = r.floats(dim, "label vector");
            list.push_back(as_corrupt("LVPP", [&] {
                return LabelVector(Embedding(std::move(values)), cls, domain, static_cast<Modality>(m), n);
            }));
        }
        if (!name.empty()) names.emplace(cls, std::move(name));
        entries.emplace(std::move(cls), std::move(list));
    }
    const std::uint32_t n_prov = r.u32("provenance count");
    std::vector<std::string> provenance;
    for (std::uint32_t i = 0; i < n_prov; ++i) provenance.push_back(r.str("provenance"));
    r.finish();
    return as_corrupt("LVPP", [&] {
        return Pool(dim, std::move(entries), std::move(provenance), std::move(names));
    });
}

void write_pool(const std::filesystem::path& path, const Pool& pool) {
    write_file_atomic(path, encode_pool(pool));
}

Pool read_pool(const std::filesystem::path& path) { return decode_pool(read_file(path)); }

std::string encode_it_params(std::span<const ITParams> sets) {
    std::size_t dim = 0;
    for (const auto& s : sets)
        for (const auto& [_, m] : s.mix) {
            if (dim == 0) dim = m.alpha.size();
            if (m.alpha.size() != dim || m.beta.size() != dim || dim == 0)
                throw InvalidInput("IT parameter vectors differ in dimension");
        }
    ByteWriter w;
    w.magic(kMagicParams);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(sets.size()));
    for (const auto& s : sets) {
        w.u32(s.task_index);
        w.domain(s.domain_id);
        w.u32(static_cast<std::uint32_t>(s.mix.size()));
        for (const auto& [cls, m] : s.mix) {
            w.str(cls.ns);
            w.u32(cls.local_id);
            for (double a : m.alpha) w.f32(static_cast<float>(a));
            for (double b : m.beta) w.f32(static_cast<float>(b));
        }
    }
    return w.take();
}

std::vector<ITParams> decode_it_params(std::string_view bytes) {
    ByteReader r(bytes, "LVPA");
    r.header(kMagicParams);
    const std::uint32_t dim = r.u32("dim");
    const std::uint32_t n_sets = r.u32("set count");
    std::vector<ITParams> sets;
    for (std::uint32_t s = 0; s < n_sets; ++s) {
        ITParams p;
        p.task_index = r.u32("task index");
        p.domain_id = r.domain("domain id");
        const std::uint32_t n_classes = r.u32("class count");
        for (std::uint32_t k = 0; k < n_classes; ++k) {
            ClassId cls;
            cls.ns = r.str("class namespace");
            cls.local_id = r.u32("class id");
            const auto a = r.floats(dim, "alpha");
            const auto b = r.floats(dim, "beta");
            if (!p.mix.emplace(cls, ClassMix{{a.begin(), a.end()}, {b.begin(), b.end()}}).second)
                throw CorruptPayload("LVPA: duplicate class " + cls.to_string());
        }
        sets.push_back(std::move(p));
    }
    r.finish();
    return sets;
}

void write_it_params(const std::filesystem::path& path, std::span<const ITParams> sets) {
    write_file_atomic(path, encode_it_params(sets));
}

std::vector<ITParams> read_it_params(const std::filesystem::path& path) {
    return decode_it_params(read_file(path));
}

std::string encode_head(const LinearClassifier& head) {
    if (head.weights.size() != head.rows() * head.dim || head.bias.size() != head.rows())
        throw InvalidInput("inconsistent linear head shape");
    ByteWriter w;
    w.magic(kMagicHead);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(head.dim));
    w.u32(static_cast<std::uint32_t>(head.rows()));
    for (std::size_t k = 0; k < head.rows(); ++k) {
        w.str(head.class_order[k].ns);
        w.u32(head.class_order[k].local_id);
        w.f64(head.bias[k]);
        for (std::size_t i = 0; i < head.dim; ++i) w.f64(head.weights[k * head.dim + i]);
    }
    return w.take();
}

LinearClassifier decode_head(std::string_view bytes) {
    ByteReader r(bytes, "LVPH");
    r.header(kMagicHead);
    LinearClassifier head;
    head.dim = r.u32("dim");
    const std::uint32_t rows = r.u32("row count");
    for (std::uint32_t k = 0; k < rows; ++k) {
        ClassId cls;
        cls.ns = r.str("class namespace");
        cls.local_id = r.u32("class id");
        if (!head.class_order.empty() && !(head.class_order.back() < cls))
            throw CorruptPayload("LVPH: rows are not in ascending class order");
        head.class_order.push_back(std::move(cls));
        head.bias.push_back(r.f64("bias"));
        for (std::size_t i = 0; i < head.dim; ++i) head.weights.push_back(r.f64("weights"));
    }
    r.finish();
    for (double x : head.weights)
        if (!std::isfinite(x)) throw CorruptPayload("LVPH: non-finite weight");
    for (double x : head.bias)
        if (!std::isfinite(x)) throw CorruptPayload("LVPH: non-finite bias");
    return head;
}

void write_head(const std::filesystem::path& path, const LinearClassifier& head) {
    write_file_atomic(path, encode_head(head));
}

LinearClassifier read_head(const std::filesystem::path& path) { return decode_head(read_file(path)); }

std::string report_to_json(const EvalReport& report) {
    using nlohmann::json;
    json j;
    j["format"] = "lvp-report";
    j["version"] = kFormatVersion;
    j["stages"] = report.stage_labels;
    json tests = json::array();
    for (std::size_t i = 0; i < report.test_labels.size(); ++i)
        tests.push_back({{"label", report.test_labels[i]},
                         {"size", i < report.test_sizes.size() ? report.test_sizes[i] : 0}});
    j["tests"] = tests;
    json matrix = json::array();
    for (const auto& row : report.accuracy) {
        json r = json::array();
        for (const auto& a : row) r.push_back(a ? json(*a) : json(nullptr));
        matrix.push_back(r);
    }
    j["accuracy"] = matrix;
    j["final_average"] = report.final_average;
    j["weighted_final_average"] = report.weighted_final_average;
    j["metadata"] = report.metadata;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptPayload(std::string("report: ") + e.what());
    }
    try {
        if (j.at("format") != "lvp-report") throw BadMagic("report: not an lvp-report document");
        const auto version = j.at("version").get<std::uint32_t>();
        if (version != kFormatVersion)
            throw VersionMismatch("report: unsupported version " + std::to_string(version) +
                                  " (expected " + std::to_string(kFormatVersion) + ")");
        EvalReport r;
        r.stage_labels = j.at("stages").get<std::vector<std::string>>();
        for (const auto& t : j.at("tests")) {
            r.test_labels.push_back(t.at("label").get<std::string>());
            r.test_sizes.push_back(t.at("size").get<std::size_t>());
        }
        for (const auto& row : j.at("accuracy")) {
            std::vector<std::optional<double>> out;
            for (const auto& a : row)
                out.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
            r.accuracy.push_back(std::move(out));
        }
        r.final_average = j.at("final_average").get<double>();
        r.weighted_final_average = j.at("weighted_final_average").get<double>();
        r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw CorruptPayload(std::string("report: ") + e.what());
    }
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
    write_file_atomic(path, report_to_json(report));
}

EvalReport read_report(const std::filesystem::path& path) { return report_from_json(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw DataError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError("failed reading " + path.string());
    return bytes;
}

}  // namespace lvp
