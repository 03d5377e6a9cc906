#include "agrimon/codec.hpp"

#include <bit>
#include <cstring>

namespace agrimon::wire {

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::byte>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::byte>(v >> (8 * i)));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::f64s(std::span<const double> v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
}

void Writer::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(std::as_bytes(std::span(s.data(), s.size())));
}

void Reader::need(std::size_t n) const {
    if (bytes_.size() - offset_ < n) throw DecodeError("payload truncated");
}

std::uint8_t Reader::u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[offset_++]);
}

std::uint32_t Reader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
    offset_ += 4;
    return v;
}

std::uint64_t Reader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
    offset_ += 8;
    return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> Reader::f64s() {
    const auto n = u32();
    need(std::size_t{n} * 8);
    std::vector<double> out(n);
    for (auto& x : out) x = f64();
    return out;
}

std::string Reader::str() {
    const auto n = u32();
    const auto b = raw(n);
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::span<const std::byte> Reader::raw(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(offset_, n);
    offset_ += n;
    return out;
}

void Reader::expect_done() const {
    if (!done()) throw DecodeError("unexpected trailing bytes in payload");
}

std::vector<std::byte> encode_frame(const Frame& frame) {
    if (frame.payload.size() > kMaxPayloadBytes) throw DecodeError("frame payload too large");
    Writer w;
    w.u8(static_cast<std::uint8_t>(frame.kind));
    w.u64(frame.task_id);
    w.f64(frame.busy_ms);
    w.u32(static_cast<std::uint32_t>(frame.payload.size()));
    w.raw(frame.payload);
    return std::move(w).take();
}

std::uint32_t decode_frame_header(std::span<const std::byte, kFrameHeaderBytes> header, Frame& frame) {
    Reader r(header);
    const auto kind = r.u8();
    if (kind < static_cast<std::uint8_t>(FrameKind::Context) || kind > static_cast<std::uint8_t>(FrameKind::Shutdown)) {
        throw DecodeError("unknown frame kind " + std::to_string(kind));
    }
    frame.kind = static_cast<FrameKind>(kind);
    frame.task_id = r.u64();
    frame.busy_ms = r.f64();
    const auto len = r.u32();
    if (len > kMaxPayloadBytes) throw DecodeError("frame payload too large");
    return len;
}

namespace {

void put_genome(Writer& w, const CropGenome& g) {
    for (double v : g.to_array()) w.f64(v);
}

CropGenome get_genome(Reader& r) {
    std::array<double, kGeneCount> a{};
    for (auto& v : a) v = r.f64();
    return CropGenome::from_array(a);
}

void put_coord(Writer& w, PixelCoord c) {
    w.u32(c.row);
    w.u32(c.col);
}

PixelCoord get_coord(Reader& r) {
    PixelCoord c;
    c.row = r.u32();
    c.col = r.u32();
    return c;
}

}  // namespace

std::vector<std::byte> encode(const JobContext& v) {
    Writer w;
    const auto& records = v.weather.records();
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) {
        w.f64(rec.rain_mm);
        w.f64(rec.et0_mm);
        w.f64(rec.tmean_c);
    }
    const auto& c = v.config;
    w.i32(c.pop_size);
    w.i32(c.generations);
    w.f64(c.crossover_rate);
    w.f64(c.mutation_rate);
    w.f64(c.mutation_sd_frac);
    w.i32(c.tournament_size);
    w.i32(c.elitism);
    w.u64(c.seed);
    w.f64(c.early_stop_rmse);
    w.u8(static_cast<std::uint8_t>(c.free_genes.size()));
    for (Gene g : c.free_genes) w.u8(static_cast<std::uint8_t>(g));
    for (const auto& iv : v.bounds.intervals) {
        w.f64(iv.low);
        w.f64(iv.high);
    }
    put_genome(w, v.template_genome);
    w.i32(v.revisit_days);
    return std::move(w).take();
}

JobContext decode_context(std::span<const std::byte> bytes) {
    Reader r(bytes);
    JobContext v;
    const auto days = r.u32();
    std::vector<WeatherRecord> records(days);
    for (std::uint32_t t = 0; t < days; ++t) {
        records[t].day = static_cast<int>(t);
        records[t].rain_mm = r.f64();
        records[t].et0_mm = r.f64();
        records[t].tmean_c = r.f64();
    }
    v.weather = WeatherSeries(std::move(records));
    auto& c = v.config;
    c.pop_size = r.i32();
    c.generations = r.i32();
    c.crossover_rate = r.f64();
    c.mutation_rate = r.f64();
    c.mutation_sd_frac = r.f64();
    c.tournament_size = r.i32();
    c.elitism = r.i32();
    c.seed = r.u64();
    c.early_stop_rmse = r.f64();
    c.free_genes.clear();
    const auto n_free = r.u8();
    for (std::uint8_t i = 0; i < n_free; ++i) {
        const auto g = r.u8();
        if (g >= kGeneCount) throw DecodeError("gene index out of range");
        c.free_genes.push_back(static_cast<Gene>(g));
    }
    for (auto& iv : v.bounds.intervals) {
        iv.low = r.f64();
        iv.high = r.f64();
    }
    v.template_genome = get_genome(r);
    v.revisit_days = r.i32();
    r.expect_done();
    return v;
}

std::vector<std::byte> encode(const PixelTask& v) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(v.pixels.size()));
    for (const auto& p : v.pixels) {
        put_coord(w, p.coord);
        w.f64s(p.observed);
    }
    return std::move(w).take();
}

PixelTask decode_pixel_task(std::span<const std::byte> bytes) {
    Reader r(bytes);
    PixelTask v;
    v.pixels.resize(r.u32());
    for (auto& p : v.pixels) {
        p.coord = get_coord(r);
        p.observed = r.f64s();
    }
    r.expect_done();
    return v;
}

std::vector<std::byte> encode(const PixelReply& v) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(v.outcomes.size()));
    for (const auto& o : v.outcomes) {
        put_coord(w, o.coord);
        put_genome(w, o.result.genome);
        w.f64(o.result.rmse);
        w.i32(o.result.generations_run);
        w.i64(o.result.evaluations);
    }
    return std::move(w).take();
}

PixelReply decode_pixel_reply(std::span<const std::byte> bytes) {
    Reader r(bytes);
    PixelReply v;
    v.outcomes.resize(r.u32());
    for (auto& o : v.outcomes) {
        o.coord = get_coord(r);
        o.result.genome = get_genome(r);
        o.result.rmse = r.f64();
        o.result.generations_run = r.i32();
        o.result.evaluations = r.i64();
    }
    r.expect_done();
    return v;
}

std::vector<std::byte> encode(const FitnessTask& v) {
    Writer w;
    put_coord(w, v.coord);
    w.u32(v.first_index);
    w.u32(static_cast<std::uint32_t>(v.genomes.size()));
    for (const auto& g : v.genomes) put_genome(w, g);
    w.f64s(v.observed);
    return std::move(w).take();
}

FitnessTask decode_fitness_task(std::span<const std::byte> bytes) {
    Reader r(bytes);
    FitnessTask v;
    v.coord = get_coord(r);
    v.first_index = r.u32();
    v.genomes.resize(r.u32());
    for (auto& g : v.genomes) g = get_genome(r);
    v.observed = r.f64s();
    r.expect_done();
    return v;
}

std::vector<std::byte> encode(const FitnessReply& v) {
    Writer w;
    w.u32(v.first_index);
    w.f64s(v.rmse);
    return std::move(w).take();
}

FitnessReply decode_fitness_reply(std::span<const std::byte> bytes) {
    Reader r(bytes);
    FitnessReply v;
    v.first_index = r.u32();
    v.rmse = r.f64s();
    r.expect_done();
    return v;
}

std::vector<std::byte> encode_failure(const std::string& message) {
    Writer w;
    w.str(message);
    return std::move(w).take();
}

std::string decode_failure(std::span<const std::byte> bytes) {
    Reader r(bytes);
    return r.str();
}

}  // namespace agrimon::wire
