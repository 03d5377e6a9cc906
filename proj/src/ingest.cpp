#include "agrimon/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"

namespace agrimon {

using nlohmann::json;
namespace fs = std::filesystem;

void IngestReport::merge(const IngestReport& other) {
    inserted += other.inserted;
    duplicates += other.duplicates;
    rejected += other.rejected;
    rejections.insert(rejections.end(), other.rejections.begin(), other.rejections.end());
    if (other.failure) failure = failure ? *failure + "; " + *other.failure : *other.failure;
}

// ---------------------------------------------------------------------------
// Time handling

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_instant(std::chrono::sys_seconds t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::hh_mm_ss hms(t - day);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(day).c_str(), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
    return buf;
}

}  // namespace

std::optional<std::chrono::sys_days> parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = digits(text, 0, 4);
    const auto m = digits(text, 5, 2);
    const auto d = digits(text, 8, 2);
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(*y), std::chrono::month(static_cast<unsigned>(*m)),
                                          std::chrono::day(static_cast<unsigned>(*d))};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days(ymd);
}

std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd(day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<std::string> normalize_timestamp(std::string_view text) {
    text = trim(text);
    const auto date = parse_date(text.substr(0, std::min<std::size_t>(10, text.size())));
    if (!date) return std::nullopt;
    std::chrono::sys_seconds instant = *date;
    if (text.size() == 10) return format_instant(instant);

    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    const auto hh = digits(text, 11, 2);
    const auto mm = digits(text, 14, 2);
    const auto ss = digits(text, 17, 2);
    if (!hh || !mm || !ss || text.size() < 19 || text[13] != ':' || text[16] != ':') return std::nullopt;
    if (*hh > 23 || *mm > 59 || *ss > 59) return std::nullopt;
    instant += std::chrono::hours(*hh) + std::chrono::minutes(*mm) + std::chrono::seconds(*ss);

    auto rest = text.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        std::size_t i = 1;
        while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
        if (i == 1) return std::nullopt;
        rest.remove_prefix(i);  // sub-second precision is dropped
    }
    if (rest.empty() || rest == "Z") return format_instant(instant);
    if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
        const auto oh = digits(rest, 1, 2);
        const auto om = digits(rest, 4, 2);
        if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
        const auto offset = std::chrono::hours(*oh) + std::chrono::minutes(*om);
        instant += rest[0] == '+' ? -offset : offset;
        return format_instant(instant);
    }
    return std::nullopt;
}

std::string now_utc_timestamp() {
    const auto now = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
    const auto secs = std::chrono::floor<std::chrono::seconds>(now);
    auto text = format_instant(secs);
    char ms[8];
    std::snprintf(ms, sizeof ms, ".%03d", static_cast<int>((now - secs).count()));
    text.insert(text.size() - 1, ms);
    return text;
}

// ---------------------------------------------------------------------------
// Parsers

namespace {

// Shared record checks; returns a reason when the observation must be rejected.
std::optional<std::string> check_observation(const SensorObservation& o) {
    if (trim(o.station_id).empty()) return "empty station id";
    if (trim(o.variable).empty()) return "empty variable name";
    if (!normalize_timestamp(o.timestamp)) return "unparseable timestamp '" + o.timestamp + "'";
    if (!std::isfinite(o.value)) return "non-finite value";
    if ((o.variable == "rain" || o.variable == "et0") && o.value < 0.0) return o.variable + " must be >= 0";
    return std::nullopt;
}

void reject(IngestReport& report, std::size_t records, std::string locator, std::string reason) {
    report.rejected += records;
    report.rejections.push_back({std::move(locator), std::move(reason)});
}

}  // namespace

ParseResult parse_weather_csv(std::string_view text, std::string_view source) {
    ParseResult out;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (trim(line).empty()) {
            if (end == text.size()) break;
            continue;
        }
        const std::string locator = "line " + std::to_string(line_no);
        if (!header_seen) {
            std::string header(trim(line));
            header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
            if (header != kWeatherCsvHeader) {
                out.report.failure = "missing header '" + std::string(kWeatherCsvHeader) + "'";
                return out;
            }
            header_seen = true;
            continue;
        }

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 5) {
            reject(out.report, 3, locator, "expected 5 fields, found " + std::to_string(fields.size()));
            continue;
        }
        const auto day = parse_date(fields[0]);
        if (!day) {
            reject(out.report, 3, locator, "bad date '" + std::string(fields[0]) + "'");
            continue;
        }
        if (fields[1].empty()) {
            reject(out.report, 3, locator, "empty station id");
            continue;
        }
        static constexpr std::array<const char*, 3> kVariables = {"rain", "et0", "tmean"};
        static constexpr std::array<const char*, 3> kColumns = {"rain_mm", "et0_mm", "tmean_c"};
        std::array<double, 3> values{};
        std::optional<std::string> problem;
        for (std::size_t i = 0; i < 3 && !problem; ++i) {
            const auto v = parse_number(fields[2 + i]);
            if (!v) {
                problem = std::string(kColumns[i]) + " is not a number: '" + std::string(fields[2 + i]) + "'";
            } else if (i < 2 && *v < 0.0) {
                problem = std::string(kColumns[i]) + " must be >= 0";
            } else {
                values[i] = *v;
            }
        }
        if (problem) {
            reject(out.report, 3, locator, *problem);
            continue;
        }
        const auto timestamp = format_date(*day) + "T00:00:00Z";
        for (std::size_t i = 0; i < 3; ++i) {
            out.records.push_back({std::string(fields[1]), timestamp, kVariables[i], values[i], std::string(source)});
        }
        out.report.inserted += 3;
    }
    if (!header_seen) out.report.failure = "missing header '" + std::string(kWeatherCsvHeader) + "'";
    return out;
}

ParseResult parse_sensor_xml(std::string_view text, std::string_view source) {
    namespace pt = boost::property_tree;
    ParseResult out;
    pt::ptree doc;
    try {
        std::istringstream in{std::string(text)};
        pt::read_xml(in, doc);
    } catch (const pt::xml_parser_error& e) {
        out.report.failure = std::string("unparseable XML document: ") + e.what();
        return out;
    }
    const auto root = doc.get_child_optional("observations");
    if (!root || doc.size() != 1) {
        out.report.failure = "document root must be a single <observations> element";
        return out;
    }

    std::size_t obs_index = 0;
    for (const auto& [tag, obs] : *root) {
        if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
        const std::string obs_locator = "obs[" + std::to_string(obs_index) + "]";
        if (tag != "obs") {
            reject(out.report, 1, "<" + tag + ">", "unexpected element");
            continue;
        }
        ++obs_index;

        std::size_t var_count = 0;
        for (const auto& child : obs) var_count += child.first == "var" ? 1 : 0;
        const auto station = obs.get_optional<std::string>("<xmlattr>.station");
        const auto time = obs.get_optional<std::string>("<xmlattr>.time");
        std::optional<std::string> timestamp = time ? normalize_timestamp(*time) : std::nullopt;
        if (!station || trim(*station).empty() || !timestamp) {
            reject(out.report, std::max<std::size_t>(var_count, 1), obs_locator,
                   !station || trim(*station).empty() ? "missing station attribute"
                   : !time                            ? "missing time attribute"
                                                      : "unparseable time '" + *time + "'");
            continue;
        }

        std::size_t var_index = 0;
        for (const auto& [child_tag, var] : obs) {
            if (child_tag == "<xmlattr>" || child_tag == "<xmlcomment>") continue;
            const std::string locator = obs_locator + "/" + child_tag + "[" + std::to_string(var_index) + "]";
            if (child_tag != "var") {
                reject(out.report, 1, locator, "unexpected element");
                continue;
            }
            ++var_index;
            const auto name = var.get_optional<std::string>("<xmlattr>.name");
            if (!name || trim(*name).empty()) {
                reject(out.report, 1, locator, "missing name attribute");
                continue;
            }
            const auto value = parse_number(var.data());
            if (!value) {
                reject(out.report, 1, locator, "value is not a number: '" + var.data() + "'");
                continue;
            }
            SensorObservation o{std::string(trim(*station)), *timestamp, std::string(trim(*name)), *value,
                                std::string(source)};
            if (auto why = check_observation(o)) {
                reject(out.report, 1, locator, *why);
                continue;
            }
            out.records.push_back(std::move(o));
            ++out.report.inserted;
        }
    }
    return out;
}

ParseResult parse_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("cannot read " + path.string());
    const auto ext = path.extension().string();
    if (ext == ".csv") return parse_weather_csv(text, path.filename().string());
    if (ext == ".xml") return parse_sensor_xml(text, path.filename().string());
    throw std::runtime_error("unsupported feed type: " + path.string());
}

// ---------------------------------------------------------------------------
// Observation store

namespace {

std::string encode_observation(const SensorObservation& o) {
    return json{{"station", o.station_id}, {"time", o.timestamp}, {"var", o.variable}, {"value", o.value},
                {"source", o.source_file}}
        .dump();
}

SensorObservation decode_observation(const std::string& line) {
    const auto j = json::parse(line);
    return {j.at("station").get<std::string>(), j.at("time").get<std::string>(), j.at("var").get<std::string>(),
            j.at("value").get<double>(), j.at("source").get<std::string>()};
}

}  // namespace

ObservationStore::ObservationStore(const fs::path& data_dir) : log_(data_dir / "observations.log") {
    for (const auto& line : log_.read_all()) {
        auto o = decode_observation(line);
        index_.try_emplace(Key{o.station_id, o.timestamp, o.variable}, std::move(o));
    }
}

IngestReport ObservationStore::ingest_batch(std::span<const SensorObservation> records) {
    IngestReport report;
    std::unique_lock lock(mutex_);
    std::vector<SensorObservation> fresh;
    std::set<Key> batch_keys;
    for (std::size_t i = 0; i < records.size(); ++i) {
        SensorObservation o = records[i];
        if (auto why = check_observation(o)) {
            reject(report, 1, "record " + std::to_string(i), *why);
            continue;
        }
        o.timestamp = *normalize_timestamp(o.timestamp);
        o.station_id = std::string(trim(o.station_id));
        o.variable = std::string(trim(o.variable));
        Key key{o.station_id, o.timestamp, o.variable};
        if (index_.contains(key) || !batch_keys.insert(key).second) {
            ++report.duplicates;
            continue;
        }
        fresh.push_back(std::move(o));
    }

    std::vector<std::string> lines;
    lines.reserve(fresh.size());
    for (const auto& o : fresh) lines.push_back(encode_observation(o));
    try {
        log_.append(lines);
    } catch (const StorageError& e) {
        report.failure = std::string("batch aborted: ") + e.what();
        reject(report, fresh.size(), "batch", *report.failure);
        return report;
    }
    for (auto& o : fresh) {
        Key key{o.station_id, o.timestamp, o.variable};
        index_.emplace(std::move(key), std::move(o));
    }
    report.inserted = fresh.size();
    return report;
}

std::optional<SensorObservation> ObservationStore::find(const std::string& station, const std::string& timestamp,
                                                        const std::string& variable) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(Key{station, timestamp, variable});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<SensorObservation> ObservationStore::range(const std::string& station, const std::string& from,
                                                       const std::string& to) const {
    std::shared_lock lock(mutex_);
    std::vector<SensorObservation> out;
    for (auto it = index_.lower_bound(Key{station, from, ""}); it != index_.end(); ++it) {
        const auto& [s, t, v] = it->first;
        if (s != station || t >= to) break;
        out.push_back(it->second);
    }
    return out;
}

std::vector<std::string> ObservationStore::stations() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [key, o] : index_) {
        if (out.empty() || out.back() != std::get<0>(key)) out.push_back(std::get<0>(key));
    }
    return out;
}

std::size_t ObservationStore::size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
}

WeatherQuery ObservationStore::query_weather(const std::string& station, int first_day, int last_day,
                                             std::chrono::sys_days season_start) const {
    if (last_day < first_day) throw ValidationError("weather query range is empty");
    WeatherQuery out;
    std::vector<WeatherRecord> records;
    std::vector<std::pair<std::string, std::string>> missing;
    for (int d = first_day; d <= last_day; ++d) {
        const auto day = season_start + std::chrono::days(d);
        const auto date = format_date(day);
        const auto observations = range(station, date + "T00:00:00Z", format_date(day + std::chrono::days(1)) + "T00:00:00Z");
        double rain = 0.0, et0 = 0.0, tsum = 0.0;
        int nrain = 0, net0 = 0, ntemp = 0;
        for (const auto& o : observations) {
            if (o.variable == "rain") rain += o.value, ++nrain;
            else if (o.variable == "et0") et0 += o.value, ++net0;
            else if (o.variable == "tmean") tsum += o.value, ++ntemp;
        }
        if (nrain == 0) missing.emplace_back(date, "rain");
        if (net0 == 0) missing.emplace_back(date, "et0");
        const int index = d - first_day;
        if (ntemp == 0) out.tmean_defaulted_days.push_back(index);
        records.push_back({index, rain, et0, ntemp == 0 ? kDefaultTmeanC : tsum / ntemp});
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "weather coverage gap for station " << station << ":";
        for (const auto& [date, var] : missing) msg << ' ' << date << '/' << var;
        throw CoverageGap(msg.str(), std::move(missing));
    }
    out.series = WeatherSeries(std::move(records));
    return out;
}

void ObservationStore::inject_write_failure(std::size_t bytes) {
    std::unique_lock lock(mutex_);
    log_.inject_write_failure(bytes);
}

// ---------------------------------------------------------------------------
// Metadata

namespace {

std::string lower(std::string_view s) {
    std::string out(trim(s));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

MetadataIndex::MetadataIndex(const fs::path& data_dir) : log_(data_dir / "metadata.log") {
    for (const auto& line : log_.read_all()) {
        const auto j = json::parse(line);
        entries_.push_back({j.at("title"), j.at("description"), j.at("keywords").get<std::vector<std::string>>(),
                            j.at("source_uri"), j.at("ingested_at")});
    }
}

MetadataEntry MetadataIndex::index_metadata(MetadataEntry entry) {
    if (trim(entry.title).empty()) throw ValidationError("metadata title must not be empty");
    std::vector<std::string> keywords;
    for (const auto& k : entry.keywords) {
        auto folded = lower(k);
        if (!folded.empty() && std::find(keywords.begin(), keywords.end(), folded) == keywords.end()) {
            keywords.push_back(std::move(folded));
        }
    }
    entry.keywords = std::move(keywords);
    if (entry.ingested_at.empty()) entry.ingested_at = now_utc_timestamp();

    const std::string line = json{{"title", entry.title},
                                  {"description", entry.description},
                                  {"keywords", entry.keywords},
                                  {"source_uri", entry.source_uri},
                                  {"ingested_at", entry.ingested_at}}
                                 .dump();
    std::unique_lock lock(mutex_);
    log_.append(std::span(&line, 1));
    entries_.push_back(entry);
    return entry;
}

std::vector<MetadataEntry> MetadataIndex::search_metadata(std::string_view keyword) const {
    const auto key = lower(keyword);
    std::shared_lock lock(mutex_);
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& k = entries_[i].keywords;
        if (std::find(k.begin(), k.end(), key) != k.end()) hits.push_back(i);
    }
    // Newest first; among equal stamps the later-indexed entry wins.
    std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        return entries_[a].ingested_at != entries_[b].ingested_at ? entries_[a].ingested_at > entries_[b].ingested_at
                                                                  : a > b;
    });
    std::vector<MetadataEntry> out;
    for (auto i : hits) out.push_back(entries_[i]);
    return out;
}

std::size_t MetadataIndex::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Inbox

IngestReport process_inbox(ObservationStore& store, const fs::path& inbox, const fs::path& archive) {
    IngestReport total;
    if (!fs::is_directory(inbox)) throw std::runtime_error("inbox is not a directory: " + inbox.string());
    fs::create_directories(archive);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(inbox)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".csv" || ext == ".xml")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        auto parsed = parse_file(file);
        for (auto& r : parsed.report.rejections) r.locator = file.filename().string() + ":" + r.locator;
        auto stored = store.ingest_batch(parsed.records);
        IngestReport file_report = stored;
        file_report.rejected += parsed.report.rejected;
        file_report.rejections.insert(file_report.rejections.begin(), parsed.report.rejections.begin(),
                                      parsed.report.rejections.end());
        if (parsed.report.failure) {
            file_report.rejections.push_back({file.filename().string(), *parsed.report.failure});
        }
        total.merge(file_report);
        if (stored.failure) continue;

        auto target = archive / file.filename();
        for (int n = 1; fs::exists(target); ++n) {
            target = archive / (file.stem().string() + "." + std::to_string(n) + file.extension().string());
        }
        fs::rename(file, target);
    }
    return total;
}

void watch_inbox(ObservationStore& store, const fs::path& inbox, const fs::path& archive,
                 std::chrono::milliseconds interval, std::stop_token stop,
                 const std::function<void(const IngestReport&)>& on_batch) {
    while (!stop.stop_requested()) {
        const auto report = process_inbox(store, inbox, archive);
        if (on_batch && report.encountered() + report.rejections.size() > 0) on_batch(report);
        const auto deadline = std::chrono::steady_clock::now() + interval;
        while (!stop.stop_requested() && std::chrono::steady_clock::now() < deadline) {
            std::this_thread::sleep_for(std::min(interval, std::chrono::milliseconds(20)));
        }
    }
}

}  // namespace agrimon
