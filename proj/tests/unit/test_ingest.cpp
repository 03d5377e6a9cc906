#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "agrimon/ingest.hpp"
#include "agrimon/json_io.hpp"
#include "support.hpp"

using namespace agrimon;
using namespace testing_support;
namespace fs = std::filesystem;
using std::chrono::sys_days;

namespace {

const std::string kHead = "date,station,rain_mm,et0_mm,tmean_c\n";

fs::path fixture(const std::string& name) { return fs::path(AGRIMON_FIXTURE_DIR) / name; }

sys_days june(int day) { return sys_days{std::chrono::year{2015} / 6 / day}; }

std::string ten_days(bool skip_day4_rain = false, bool with_tmean = true) {
    std::string out;
    for (int d = 1; d <= 10; ++d) {
        const auto date = format_date(june(d));
        out += "<obs station=\"S\" time=\"" + date + "\">";
        if (!(skip_day4_rain && d == 5)) out += "<var name=\"rain\">" + std::to_string(d) + ".5</var>";
        out += "<var name=\"et0\">4</var>";
        if (with_tmean) out += "<var name=\"tmean\">21</var>";
        out += "</obs>";
    }
    return "<observations>" + out + "</observations>";
}

}  // namespace

TEST(ParseCsv, SingleRowYieldsThreeObservations) {
    const auto r = parse_weather_csv(kHead + "2015-06-01,STN1,3.2,4.1,21.0\n");
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.report.inserted, 3u);
    EXPECT_EQ(r.report.rejected, 0u);
    EXPECT_EQ(r.records[0], (SensorObservation{"STN1", "2015-06-01T00:00:00Z", "rain", 3.2, ""}));
    EXPECT_EQ(r.records[1].variable, "et0");
    EXPECT_EQ(r.records[1].value, 4.1);
    EXPECT_EQ(r.records[2].variable, "tmean");
    EXPECT_EQ(r.records[2].value, 21.0);
}

TEST(ParseCsv, HeaderOnlyAndBadRows) {
    const auto empty = parse_weather_csv(kHead);
    EXPECT_TRUE(empty.records.empty());
    EXPECT_EQ(empty.report.encountered(), 0u);
    EXPECT_FALSE(empty.report.failure);

    const auto r = parse_weather_csv(kHead + "2015-06-01,A,abc,1,20\r\n2015-06-02,A,1,1,20\r\n");
    EXPECT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.report.rejected, 3u);
    ASSERT_EQ(r.report.rejections.size(), 1u);
    EXPECT_EQ(r.report.rejections[0].locator, "line 2");

    const auto negative = parse_weather_csv(kHead + "2015-06-01,A,-1,1,20\n2015-13-01,A,1,1,20\n2015-06-01,A,1\n");
    EXPECT_EQ(negative.report.rejected, 9u);
    EXPECT_TRUE(negative.records.empty());
}

TEST(ParseCsv, WrongHeaderIsADocumentFailure) {
    const auto r = parse_weather_csv("day,station,rain\n2015-06-01,A,1\n");
    EXPECT_TRUE(r.report.failure.has_value());
    EXPECT_TRUE(r.records.empty());
}

TEST(ParseXml, TwoVarsGiveTwoObservations) {
    const auto r = parse_sensor_xml(
        R"(<observations><obs station="S1" time="2015-06-01T10:00:00Z"><var name="soil">0.3</var><var name="rain">2</var></obs></observations>)");
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].variable, "soil");
    EXPECT_EQ(r.records[1].value, 2.0);
}

TEST(ParseXml, EmptyDocumentAndIsolation) {
    const auto empty = parse_sensor_xml("<observations/>");
    EXPECT_TRUE(empty.records.empty());
    EXPECT_EQ(empty.report.rejected, 0u);
    EXPECT_FALSE(empty.report.failure);

    const auto r = parse_sensor_xml(
        R"(<observations><obs station="S" time="2015-06-01"><var name="a">x</var><var name="b">1</var></obs></observations>)");
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].variable, "b");
    EXPECT_EQ(r.report.rejected, 1u);
    EXPECT_EQ(r.report.rejections[0].locator, "obs[0]/var[0]");
}

TEST(ParseXml, MalformedDocumentIsAFailure) {
    EXPECT_TRUE(parse_sensor_xml("<observations><obs>").report.failure.has_value());
    EXPECT_TRUE(parse_sensor_xml("<readings/>").report.failure.has_value());
}

TEST(Fixtures, HandDerivedCounts) {
    // 5 data rows, one with rain "abc": 4 x 3 accepted, 3 rejected.
    const auto csv = parse_file(fixture("weather_sample.csv"));
    EXPECT_EQ(csv.records.size(), 12u);
    EXPECT_EQ(csv.report.rejected, 3u);
    ASSERT_EQ(csv.report.rejections.size(), 1u);
    EXPECT_EQ(csv.report.rejections[0].locator, "line 4");

    // obs[0]: 2 ok. obs[1]: soil ok, battery "low" rejected. obs[2]: no time, both vars rejected.
    const auto xml = parse_file(fixture("sensors_sample.xml"));
    EXPECT_EQ(xml.records.size(), 3u);
    EXPECT_EQ(xml.report.rejected, 3u);
    ASSERT_EQ(xml.report.rejections.size(), 2u);
    EXPECT_EQ(xml.report.rejections[0].locator, "obs[1]/var[1]");
    EXPECT_EQ(xml.report.rejections[1].locator, "obs[2]");
    // 08:00+02:00 is the same instant as obs[0].
    EXPECT_EQ(xml.records[2].timestamp, "2015-06-01T06:00:00Z");

    TempDir dir("fixtures");
    ObservationStore store(dir.path());
    EXPECT_EQ(store.ingest_batch(csv.records).inserted, 12u);
    const auto rx = store.ingest_batch(xml.records);
    EXPECT_EQ(rx.inserted, 2u);
    EXPECT_EQ(rx.duplicates, 1u);
    EXPECT_EQ(store.size(), 14u);
}

TEST(Timestamps, Normalization) {
    EXPECT_EQ(normalize_timestamp("2015-06-01"), "2015-06-01T00:00:00Z");
    EXPECT_EQ(normalize_timestamp("2015-06-01 12:30:00"), "2015-06-01T12:30:00Z");
    EXPECT_EQ(normalize_timestamp("2015-06-01T12:30:00.250Z"), "2015-06-01T12:30:00Z");
    EXPECT_EQ(normalize_timestamp("2015-06-01T01:00:00+02:00"), "2015-05-31T23:00:00Z");
    EXPECT_EQ(normalize_timestamp("2016-02-29T23:30:00-01:00"), "2016-03-01T00:30:00Z");
    EXPECT_FALSE(normalize_timestamp("2015-02-29"));
    EXPECT_FALSE(normalize_timestamp("2015-06-01T25:00:00Z"));
    EXPECT_FALSE(normalize_timestamp("yesterday"));
    EXPECT_EQ(format_date(*parse_date("2015-06-09")), "2015-06-09");
}

TEST(Store, IdempotentAndFirstWriteWins) {
    TempDir dir("store");
    ObservationStore store(dir.path());
    EXPECT_EQ(store.ingest_batch({}).encountered(), 0u);

    const auto batch = parse_weather_csv(kHead + "2015-06-01,A,1,2,20\n2015-06-02,A,3,4,21\n").records;
    EXPECT_EQ(store.ingest_batch(batch).inserted, 6u);
    const auto again = store.ingest_batch(batch);
    EXPECT_EQ(again.inserted, 0u);
    EXPECT_EQ(again.duplicates, 6u);

    std::vector<SensorObservation> pair = {{"B", "2015-06-01T00:00:00Z", "rain", 1.0, ""},
                                           {"B", "2015-06-01T00:00:00Z", "rain", 9.0, ""}};
    const auto r = store.ingest_batch(pair);
    EXPECT_EQ(r.inserted, 1u);
    EXPECT_EQ(r.duplicates, 1u);
    EXPECT_EQ(store.find("B", "2015-06-01T00:00:00Z", "rain")->value, 1.0);
}

TEST(Store, SameInputGivesByteIdenticalLog) {
    TempDir a("log-a"), b("log-b");
    const auto records = parse_file(fixture("weather_sample.csv")).records;
    {
        ObservationStore sa(a.path());
        sa.ingest_batch(records);
        ObservationStore sb(b.path());
        sb.ingest_batch(records);
    }
    EXPECT_EQ(read_text_file(a / "observations.log"), read_text_file(b / "observations.log"));
}

TEST(Store, FailedWriteLeavesNothingBehind) {
    TempDir dir("atomic");
    ObservationStore store(dir.path());
    const auto first = parse_weather_csv(kHead + "2015-06-01,A,1,2,20\n").records;
    store.ingest_batch(first);
    const auto before = read_text_file(dir / "observations.log");

    store.inject_write_failure(10);
    const auto second = parse_weather_csv(kHead + "2015-06-02,A,1,2,20\n2015-06-03,A,1,2,20\n").records;
    const auto r = store.ingest_batch(second);
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_NE(r.failure->find("batch aborted"), std::string::npos);
    EXPECT_EQ(r.inserted, 0u);
    EXPECT_EQ(r.rejected, 6u);
    EXPECT_EQ(store.size(), 3u);
    EXPECT_EQ(read_text_file(dir / "observations.log"), before);

    EXPECT_EQ(store.ingest_batch(second).inserted, 6u);
    ObservationStore reopened(dir.path());
    EXPECT_EQ(reopened.size(), 9u);
}

TEST(Store, TornTailIsDroppedOnReopen) {
    TempDir dir("torn");
    {
        ObservationStore store(dir.path());
        store.ingest_batch(parse_weather_csv(kHead + "2015-06-01,A,1,2,20\n").records);
    }
    {
        std::ofstream out(dir / "observations.log", std::ios::app);
        out << R"({"station":"A","ti)";
    }
    ObservationStore store(dir.path());
    EXPECT_EQ(store.size(), 3u);
    EXPECT_EQ(store.ingest_batch(parse_weather_csv(kHead + "2015-06-02,A,1,2,20\n").records).inserted, 3u);
    EXPECT_EQ(ObservationStore(dir.path()).size(), 6u);
}

TEST(Store, RoundTripAndReopenPreserveQueries) {
    TempDir dir("roundtrip");
    std::mt19937_64 gen(71);
    const auto w = random_weather(gen, 30);
    const auto records = parse_weather_csv(weather_to_csv(w, "R", june(1))).records;
    WeatherQuery first;
    {
        ObservationStore store(dir.path());
        EXPECT_EQ(store.ingest_batch(records).inserted, 90u);
        first = store.query_weather("R", 0, 29, june(1));
        for (std::size_t t = 0; t < 30; ++t) {
            EXPECT_TRUE(same_bits(first.series[t].rain_mm, w[t].rain_mm));
            EXPECT_TRUE(same_bits(first.series[t].et0_mm, w[t].et0_mm));
        }
    }
    ObservationStore reopened(dir.path());
    const auto second = reopened.query_weather("R", 0, 29, june(1));
    EXPECT_EQ(second.series, first.series);
    EXPECT_EQ(reopened.stations(), (std::vector<std::string>{"R"}));
    EXPECT_EQ(reopened.range("R", "2015-06-01", "2015-06-03").size(), 6u);
}

TEST(Query, FullCoverageGapAndDefaultTmean) {
    TempDir dir("query");
    ObservationStore store(dir.path());
    store.ingest_batch(parse_sensor_xml(ten_days()).records);
    const auto q = store.query_weather("S", 0, 9, june(1));
    EXPECT_EQ(q.series.season_len(), 10u);
    EXPECT_FALSE(q.warning());
    EXPECT_EQ(q.series[3].rain_mm, 4.5);

    TempDir gap_dir("gap");
    ObservationStore gap(gap_dir.path());
    gap.ingest_batch(parse_sensor_xml(ten_days(true)).records);
    try {
        gap.query_weather("S", 0, 9, june(1));
        FAIL() << "expected a coverage gap";
    } catch (const CoverageGap& e) {
        ASSERT_EQ(e.missing().size(), 1u);
        EXPECT_EQ(e.missing()[0], (std::pair<std::string, std::string>{"2015-06-05", "rain"}));
    }

    TempDir warm_dir("tmean");
    ObservationStore warm(warm_dir.path());
    warm.ingest_batch(parse_sensor_xml(ten_days(false, false)).records);
    const auto w = warm.query_weather("S", 0, 9, june(1));
    EXPECT_TRUE(w.warning());
    EXPECT_EQ(w.tmean_defaulted_days.size(), 10u);
    for (const auto& r : w.series.records()) EXPECT_EQ(r.tmean_c, kDefaultTmeanC);
}

TEST(Query, SubDailyValuesAggregatePerDay) {
    TempDir dir("daily");
    ObservationStore store(dir.path());
    store.ingest_batch(parse_sensor_xml(
                           R"(<observations>
             <obs station="S" time="2015-06-01T06:00:00Z"><var name="rain">1</var><var name="et0">2</var><var name="tmean">10</var></obs>
             <obs station="S" time="2015-06-01T18:00:00Z"><var name="rain">2</var><var name="et0">1</var><var name="tmean">20</var></obs>
           </observations>)")
                           .records);
    const auto q = store.query_weather("S", 0, 0, june(1));
    EXPECT_EQ(q.series[0].rain_mm, 3.0);
    EXPECT_EQ(q.series[0].et0_mm, 3.0);
    EXPECT_EQ(q.series[0].tmean_c, 15.0);
}

TEST(Metadata, CaseFoldingOrderingAndPersistence) {
    TempDir dir("meta");
    {
        MetadataIndex index(dir.path());
        index.index_metadata({"Soil probes", "", {"Soil", "moisture", "SOIL"}, "file:a", "2015-06-01T00:00:00Z"});
        index.index_metadata({"Rain gauges", "", {"soil", "rain"}, "file:b", "2015-06-02T00:00:00Z"});
        const auto hits = index.search_metadata("SOIL");
        ASSERT_EQ(hits.size(), 2u);
        EXPECT_EQ(hits[0].title, "Rain gauges");
        EXPECT_EQ(hits[1].keywords, (std::vector<std::string>{"soil", "moisture"}));
        EXPECT_TRUE(index.search_metadata("wind").empty());
    }
    MetadataIndex reopened(dir.path());
    EXPECT_EQ(reopened.size(), 2u);
    EXPECT_EQ(reopened.search_metadata("moisture").size(), 1u);
    EXPECT_FALSE(reopened.index_metadata({"t", "", {"x"}, "", ""}).ingested_at.empty());
}

TEST(Inbox, ProcessesAndArchives) {
    TempDir dir("inbox");
    const auto inbox = dir / "inbox";
    const auto archive = dir / "archive";
    fs::create_directories(inbox);
    ObservationStore store(dir / "data");
    EXPECT_EQ(process_inbox(store, inbox, archive).encountered(), 0u);

    fs::copy_file(fixture("weather_sample.csv"), inbox / "a.csv");
    fs::copy_file(fixture("sensors_sample.xml"), inbox / "b.xml");
    std::ofstream(inbox / "notes.txt") << "ignored";
    const auto r = process_inbox(store, inbox, archive);
    EXPECT_EQ(r.inserted, 14u);
    EXPECT_EQ(r.duplicates, 1u);
    EXPECT_EQ(r.rejected, 6u);
    EXPECT_EQ(r.rejections[0].locator, "a.csv:line 4");
    EXPECT_TRUE(fs::exists(archive / "a.csv"));
    EXPECT_TRUE(fs::exists(archive / "b.xml"));
    EXPECT_FALSE(fs::exists(inbox / "a.csv"));
    EXPECT_TRUE(fs::exists(inbox / "notes.txt"));

    fs::copy_file(fixture("weather_sample.csv"), inbox / "a.csv");
    const auto again = process_inbox(store, inbox, archive);
    EXPECT_EQ(again.inserted, 0u);
    EXPECT_EQ(again.duplicates, 12u);
    EXPECT_EQ(std::distance(fs::directory_iterator(archive), fs::directory_iterator{}), 3);
}

TEST(Inbox, WatcherPicksUpNewFiles) {
    TempDir dir("watch");
    const auto inbox = dir / "inbox";
    fs::create_directories(inbox);
    ObservationStore store(dir / "data");
    std::atomic<std::size_t> inserted{0};
    std::jthread watcher([&](std::stop_token st) {
        watch_inbox(store, inbox, dir / "archive", std::chrono::milliseconds(20), st,
                    [&](const IngestReport& r) { inserted += r.inserted; });
    });
    fs::copy_file(fixture("weather_sample.csv"), inbox / "late.csv");
    for (int i = 0; i < 200 && inserted.load() < 12; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    watcher.request_stop();
    watcher.join();
    EXPECT_EQ(inserted.load(), 12u);
    EXPECT_EQ(store.size(), 12u);
}
