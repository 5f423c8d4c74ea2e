#include "ccfg/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>

#include "ccfg/hash.hpp"

namespace ccfg {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'C', 'F', 'G'};
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void tag(const char (&t)[5]) { bytes.insert(bytes.end(), t, t + 4); }
    void append(const std::vector<std::uint8_t>& other) { bytes.insert(bytes.end(), other.begin(), other.end()); }

    std::vector<std::uint8_t> bytes;

private:
    void put(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
    double f64() { return std::bit_cast<double>(get(8)); }

    void expect_tag(const char (&t)[5])
    {
        need(4);
        if (std::memcmp(data_ + pos_, t, 4) != 0) throw CheckpointError(std::string("checkpoint: expected section ") + t);
        pos_ += 4;
    }

    /// Sub-reader over a length-prefixed payload.
    Reader section(const char (&t)[5])
    {
        expect_tag(t);
        const std::uint64_t len = u64();
        if (len > size_ - pos_) throw CheckpointError(std::string("checkpoint: section ") + t + " overruns the file");
        Reader sub(data_ + pos_, static_cast<std::size_t>(len));
        pos_ += static_cast<std::size_t>(len);
        return sub;
    }

    void finish(const char* what) const
    {
        if (pos_ != size_) throw CheckpointError(std::string("checkpoint: trailing bytes in ") + what);
    }

    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const
    {
        if (n > size_ - pos_) throw CheckpointError("checkpoint: truncated");
    }

    std::uint64_t get(int n)
    {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

void write_section(Writer& out, const char (&t)[5], const Writer& payload)
{
    out.tag(t);
    out.u64(payload.bytes.size());
    out.append(payload.bytes);
}

std::uint32_t read_dim(Reader& r, const char* what)
{
    const std::uint32_t v = r.u32();
    if (v > kMaxDim) throw CheckpointError(std::string("checkpoint: implausible ") + what);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const EpsModel& model, const Schedule& schedule)
{
    check_fingerprint(model, schedule);
    model.net.check_shapes();

    Writer sched;
    sched.i64(schedule.steps());
    sched.f64(schedule.beta_min());
    sched.f64(schedule.beta_max());

    Writer dims;
    dims.u32(static_cast<std::uint32_t>(model.data_dim));
    dims.u32(static_cast<std::uint32_t>(model.num_classes));
    dims.u32(static_cast<std::uint32_t>(model.time_features));
    dims.u32(static_cast<std::uint32_t>(model.embed_dim()));
    dims.u32(model.net.activation == Activation::Tanh ? 0u : 1u);
    dims.u32(static_cast<std::uint32_t>(model.net.num_layers()));
    for (int d : model.net.dims) dims.u32(static_cast<std::uint32_t>(d));

    Writer embed;
    for (Eigen::Index i = 0; i < model.null_embedding.size(); ++i) embed.f64(model.null_embedding[i]);
    for (Eigen::Index i = 0; i < model.class_offsets.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.class_offsets.cols(); ++j) embed.f64(model.class_offsets(i, j));
    }

    Writer weights;
    for (int l = 0; l < model.net.num_layers(); ++l) {
        const auto& w = model.net.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) weights.f64(w(i, j));
        }
        for (Eigen::Index i = 0; i < model.net.biases[l].size(); ++i) weights.f64(model.net.biases[l][i]);
    }

    Writer out;
    out.bytes.assign(kMagic.begin(), kMagic.end());
    out.u32(kCheckpointVersion);
    write_section(out, "SCHD", sched);
    write_section(out, "DIMS", dims);
    write_section(out, "EMBD", embed);
    write_section(out, "WGTS", weights);
    Fnv1a h;
    h.add_bytes(out.bytes);
    out.u64(h.value());
    return std::move(out.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < kMagic.size() + 4 + 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw CheckpointError("checkpoint: bad magic (not a CCFG file)");
    }
    const std::size_t body = bytes.size() - 8;
    Fnv1a h;
    h.add_bytes(std::span<const std::uint8_t>(bytes.data(), body));
    Reader tail(bytes.data() + body, 8);
    if (tail.u64() != h.value()) throw CheckpointError("checkpoint: checksum mismatch");

    Reader r(bytes.data() + kMagic.size(), body - kMagic.size());
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
    }

    Checkpoint ck;
    {
        Reader s = r.section("SCHD");
        const std::int64_t steps = s.i64();
        if (steps < 2 || steps > kMaxDim) throw CheckpointError("checkpoint: implausible step count");
        ck.steps = static_cast<int>(steps);
        ck.beta_min = s.f64();
        ck.beta_max = s.f64();
        s.finish("SCHD");
    }
    const Schedule schedule = [&] {
        try {
            return ck.schedule();
        } catch (const std::invalid_argument& e) {
            throw CheckpointError(std::string("checkpoint: invalid schedule: ") + e.what());
        }
    }();

    EpsModel& m = ck.model;
    int embed_dim = 0;
    {
        Reader s = r.section("DIMS");
        m.data_dim = static_cast<int>(read_dim(s, "data dimension"));
        m.num_classes = static_cast<int>(read_dim(s, "class count"));
        m.time_features = static_cast<int>(read_dim(s, "time feature count"));
        embed_dim = static_cast<int>(read_dim(s, "embedding size"));
        const std::uint32_t act = s.u32();
        if (act > 1) throw CheckpointError("checkpoint: unknown activation code");
        m.net.activation = act == 0 ? Activation::Tanh : Activation::Silu;
        const std::uint32_t layers = read_dim(s, "layer count");
        if (layers < 1) throw CheckpointError("checkpoint: network has no layers");
        for (std::uint32_t i = 0; i <= layers; ++i) {
            const auto d = static_cast<int>(read_dim(s, "layer width"));
            if (d < 1) throw CheckpointError("checkpoint: zero layer width");
            m.net.dims.push_back(d);
        }
        s.finish("DIMS");
    }
    m.steps = ck.steps;
    m.schedule_fingerprint = schedule.fingerprint();
    if (m.data_dim < 1 || m.num_classes < 1 || embed_dim < 1 ||
        m.net.dims.front() != m.data_dim + m.time_features + embed_dim || m.net.dims.back() != m.data_dim) {
        throw CheckpointError("checkpoint: inconsistent model dimensions");
    }
    {
        Reader s = r.section("EMBD");
        m.null_embedding.resize(embed_dim);
        for (int i = 0; i < embed_dim; ++i) m.null_embedding[i] = s.f64();
        m.class_offsets.resize(embed_dim, m.num_classes);
        for (int i = 0; i < embed_dim; ++i) {
            for (int j = 0; j < m.num_classes; ++j) m.class_offsets(i, j) = s.f64();
        }
        s.finish("EMBD");
    }
    {
        Reader s = r.section("WGTS");
        for (std::size_t l = 0; l + 1 < m.net.dims.size(); ++l) {
            Mlp::Matrix w(m.net.dims[l + 1], m.net.dims[l]);
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = s.f64();
            }
            Mlp::Vector b(m.net.dims[l + 1]);
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = s.f64();
            m.net.weights.push_back(std::move(w));
            m.net.biases.push_back(std::move(b));
        }
        s.finish("WGTS");
    }
    r.finish("checkpoint");
    m.net.check_shapes();
    if (m.time_features % 2 != 0) throw CheckpointError("checkpoint: odd time feature count");
    return ck;
}

void save_checkpoint(const std::string& path, const EpsModel& model, const Schedule& schedule)
{
    const auto bytes = encode_checkpoint(model, schedule);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace ccfg
