#include <gtest/gtest.h>

#include <array>
#include <limits>

#include "agrimon/codec.hpp"
#include "support.hpp"

using namespace agrimon;
using namespace agrimon::wire;
using namespace testing_support;

TEST(Codec, PrimitivesAreLittleEndian) {
    Writer w;
    w.u32(0x01020304u);
    w.f64(1.0);
    w.str("ab");
    const auto bytes = std::move(w).take();
    ASSERT_EQ(bytes.size(), 4u + 8u + 4u + 2u);
    EXPECT_EQ(bytes[0], std::byte{0x04});
    EXPECT_EQ(bytes[3], std::byte{0x01});
    EXPECT_EQ(bytes[11], std::byte{0x3F});  // 1.0 = 0x3FF0000000000000
    Reader r(bytes);
    EXPECT_EQ(r.u32(), 0x01020304u);
    EXPECT_EQ(r.f64(), 1.0);
    EXPECT_EQ(r.str(), "ab");
    EXPECT_NO_THROW(r.expect_done());
}

TEST(Codec, ReaderRejectsOverrunAndTrailingBytes) {
    Writer w;
    w.u32(7);
    const auto bytes = std::move(w).take();
    Reader r(bytes);
    EXPECT_THROW(r.u64(), DecodeError);
    Reader tail(bytes);
    tail.u8();
    EXPECT_THROW(tail.expect_done(), DecodeError);
}

TEST(Codec, FrameHeaderRoundTrip) {
    Frame f{FrameKind::FitnessReply, 123456789ULL, 2.5, {std::byte{1}, std::byte{2}, std::byte{3}}};
    const auto bytes = encode_frame(f);
    ASSERT_EQ(bytes.size(), kFrameHeaderBytes + 3);
    Frame back;
    const auto len = decode_frame_header(std::span<const std::byte, kFrameHeaderBytes>(bytes.data(), kFrameHeaderBytes), back);
    EXPECT_EQ(len, 3u);
    EXPECT_EQ(back.kind, FrameKind::FitnessReply);
    EXPECT_EQ(back.task_id, 123456789ULL);
    EXPECT_EQ(back.busy_ms, 2.5);

    auto bad = bytes;
    bad[0] = std::byte{99};
    EXPECT_THROW(decode_frame_header(std::span<const std::byte, kFrameHeaderBytes>(bad.data(), kFrameHeaderBytes), back),
                 DecodeError);
}

TEST(Codec, MessagesRoundTrip) {
    std::mt19937_64 gen(51);
    JobContext ctx;
    ctx.weather = random_weather(gen, 30);
    ctx.config.seed = 0xDEADBEEFCAFEULL;
    ctx.config.free_genes = {Gene::LaiMax, Gene::SowDay};
    ctx.bounds = GenomeBounds::defaults(30);
    ctx.template_genome = random_genome(gen, 30);
    ctx.revisit_days = 5;
    const auto c = decode_context(encode(ctx));
    EXPECT_EQ(c.weather, ctx.weather);
    EXPECT_EQ(c.config, ctx.config);
    EXPECT_EQ(c.bounds, ctx.bounds);
    EXPECT_EQ(c.template_genome, ctx.template_genome);
    EXPECT_EQ(c.revisit_days, 5);

    PixelTask task{{{{1, 2}, {0.1, 0.2}}, {{3, 4}, {}}}};
    const auto t = decode_pixel_task(encode(task));
    ASSERT_EQ(t.pixels.size(), 2u);
    EXPECT_EQ(t.pixels[0].coord, (PixelCoord{1, 2}));
    EXPECT_EQ(t.pixels[0].observed, (std::vector<double>{0.1, 0.2}));

    PixelReply reply{{{{5, 6}, {random_genome(gen, 30), 0.25, 7, 99}}}};
    const auto rr = decode_pixel_reply(encode(reply));
    ASSERT_EQ(rr.outcomes.size(), 1u);
    EXPECT_EQ(rr.outcomes[0].result, reply.outcomes[0].result);

    FitnessTask ft{{2, 9}, 16, {random_genome(gen, 30), random_genome(gen, 30)}, {1.0, 2.0}};
    const auto f = decode_fitness_task(encode(ft));
    EXPECT_EQ(f.first_index, 16u);
    EXPECT_EQ(f.genomes, ft.genomes);
    EXPECT_EQ(f.observed, ft.observed);

    FitnessReply fr{4, {0.5, std::numeric_limits<double>::denorm_min()}};
    const auto fb = decode_fitness_reply(encode(fr));
    EXPECT_EQ(fb.first_index, 4u);
    EXPECT_TRUE(same_bits(fb.rmse[1], fr.rmse[1]));

    EXPECT_EQ(decode_failure(encode_failure("boom")), "boom");
}

TEST(Codec, TruncatedPayloadsAreRejected) {
    const auto bytes = encode(PixelTask{{{{1, 2}, {0.1, 0.2, 0.3}}}});
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        EXPECT_THROW(decode_pixel_task(std::span(bytes.data(), cut)), DecodeError) << cut;
    }
}
