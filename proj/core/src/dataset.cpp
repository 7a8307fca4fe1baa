// SPDX-License-Identifier: Apache-2.0
#include "multilog/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "multilog/text.hpp"

namespace multilog {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kScenarioNames[] = {"Single2Single", "Single2Multi",
                                               "Multi2Single", "Multi2Multi"};

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

std::optional<int> fixed_digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
        out << content;
        if (!out) throw Error(fmt::format("write failed for {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

}  // namespace

std::string_view to_string(Scenario s) {
    return kScenarioNames[static_cast<int>(s)];
}

Scenario scenario_from_string(std::string_view name) {
    for (int i = 0; i < 4; ++i) {
        if (kScenarioNames[i] == name) return static_cast<Scenario>(i);
    }
    throw Error(fmt::format("unknown scenario '{}'", name));
}

std::size_t ClusterDataset::entry_count() const {
    std::size_t n = 0;
    for (const auto& node : entries) n += node.size();
    return n;
}

std::optional<std::pair<TimestampMs, TimestampMs>> ClusterDataset::time_range() const {
    std::optional<std::pair<TimestampMs, TimestampMs>> range;
    for (const auto& node : entries) {
        if (node.empty()) continue;
        const TimestampMs lo = node.front().ts;
        const TimestampMs hi = node.back().ts;
        if (!range) {
            range.emplace(lo, hi);
        } else {
            range->first = std::min(range->first, lo);
            range->second = std::max(range->second, hi);
        }
    }
    return range;
}

std::string format_iso8601(TimestampMs ts) {
    using namespace std::chrono;
    const sys_time<milliseconds> tp{milliseconds{ts}};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss<milliseconds> tod{tp - day};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       tod.hours().count(), tod.minutes().count(), tod.seconds().count(),
                       tod.subseconds().count());
}

std::optional<TimestampMs> parse_iso8601(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.fff][Z]
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':') {
        return std::nullopt;
    }
    const auto y = fixed_digits(s, 0, 4), mo = fixed_digits(s, 5, 2), d = fixed_digits(s, 8, 2),
               h = fixed_digits(s, 11, 2), mi = fixed_digits(s, 14, 2),
               sec = fixed_digits(s, 17, 2);
    if (!y || !mo || !d || !h || !mi || !sec) return std::nullopt;
    if (*h > 23 || *mi > 59 || *sec > 60) return std::nullopt;
    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 3; ++i) millis *= 10;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) return std::nullopt;

    using namespace std::chrono;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    const auto tp = sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{*sec} + milliseconds{millis};
    const TimestampMs ms = duration_cast<milliseconds>(tp.time_since_epoch()).count();
    if (ms < 0) return std::nullopt;
    return ms;
}

std::optional<LogEntry> parse_log_line(std::string_view line, NodeId node) {
    line = trim(line);
    const auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos) return std::nullopt;
    const auto sp2 = line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos) return std::nullopt;
    auto ts = parse_iso8601(line.substr(0, sp1));
    if (!ts) return std::nullopt;
    const auto level = line.substr(sp1 + 1, sp2 - sp1 - 1);
    const auto message = trim(line.substr(sp2 + 1));
    if (level.empty() || message.empty()) return std::nullopt;
    return LogEntry{node, *ts, std::string(level), std::string(message)};
}

std::string format_log_line(const LogEntry& e) {
    return fmt::format("{} {} {}", format_iso8601(e.ts), e.level, e.message);
}

AnomalyLabel parse_label_row(std::string_view row) {
    const auto cols = split(trim(row), ',');
    if (cols.size() != 4) {
        throw Error(fmt::format("expected 4 columns, found {}", cols.size()));
    }
    AnomalyLabel label;
    auto start = parse_number<TimestampMs>(trim(cols[0]));
    auto end = parse_number<TimestampMs>(trim(cols[1]));
    auto no = parse_number<int>(trim(cols[2]));
    if (!start || !end) throw Error("timestamps must be integer milliseconds");
    if (!no) throw Error("anomaly_no must be an integer");
    label.start_ts = *start;
    label.end_ts = *end;
    label.anomaly_no = *no;
    if (label.start_ts < 0 || label.start_ts >= label.end_ts) {
        throw Error("start_ts must be non-negative and less than end_ts");
    }
    if (label.anomaly_no < 1 || label.anomaly_no > kAnomalyTypeCount) {
        throw Error(fmt::format("anomaly_no {} outside 1..{}", label.anomaly_no, kAnomalyTypeCount));
    }
    for (auto id : split(trim(cols[3]), ';')) {
        auto node = parse_number<NodeId>(trim(id));
        if (!node) throw Error(fmt::format("bad node id '{}'", id));
        label.nodes.insert(*node);
    }
    if (label.nodes.empty()) throw Error("label lists no nodes");
    return label;
}

ClusterDataset load_dataset(const fs::path& dir, LoadStats* stats) {
    const fs::path manifest_path = dir / "manifest.txt";
    std::ifstream manifest(manifest_path);
    if (!manifest) throw Error(fmt::format("missing manifest {}", manifest_path.string()));

    std::map<std::string, std::string, std::less<>> keys;
    std::string line;
    while (std::getline(manifest, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw Error(fmt::format("manifest line '{}' is not key=value", t));
        }
        keys[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
    }
    const auto n_it = keys.find("n_nodes");
    const auto s_it = keys.find("scenario");
    if (n_it == keys.end() || s_it == keys.end()) {
        throw Error("manifest must define n_nodes and scenario");
    }
    const auto n_nodes = parse_number<std::size_t>(n_it->second);
    if (!n_nodes || *n_nodes == 0) throw Error("manifest n_nodes must be a positive integer");

    ClusterDataset ds;
    ds.n_nodes = *n_nodes;
    ds.scenario = scenario_from_string(s_it->second);
    ds.entries.resize(ds.n_nodes);
    LoadStats local;
    local.skipped_lines.assign(ds.n_nodes, 0);
    local.reordered.assign(ds.n_nodes, 0);

    for (std::size_t i = 0; i < ds.n_nodes; ++i) {
        const fs::path path = dir / fmt::format("node_{}.log", i);
        std::ifstream in(path);
        if (!in) throw Error(fmt::format("missing node log {}", path.string()));
        auto& node = ds.entries[i];
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            if (auto e = parse_log_line(line, static_cast<NodeId>(i))) {
                node.push_back(std::move(*e));
            } else {
                ++local.skipped_lines[i];
            }
        }
        if (!std::is_sorted(node.begin(), node.end(),
                            [](const LogEntry& a, const LogEntry& b) { return a.ts < b.ts; })) {
            auto before = node;
            std::stable_sort(node.begin(), node.end(),
                             [](const LogEntry& a, const LogEntry& b) { return a.ts < b.ts; });
            for (std::size_t k = 0; k < node.size(); ++k) {
                if (!(before[k] == node[k])) ++local.reordered[i];
            }
            fmt::print(stderr, "warning: {}: {} entries re-sorted by timestamp\n", path.string(),
                       local.reordered[i]);
        }
        if (local.skipped_lines[i] > 0) {
            fmt::print(stderr, "warning: {}: skipped {} unparseable lines\n", path.string(),
                       local.skipped_lines[i]);
        }
    }

    const fs::path labels_path = dir / "labels.csv";
    std::ifstream labels(labels_path);
    if (!labels) throw Error(fmt::format("missing labels file {}", labels_path.string()));
    std::size_t row = 0;
    while (std::getline(labels, line)) {
        ++row;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (row == 1 && t.starts_with("start_ts")) continue;
        try {
            auto label = parse_label_row(t);
            for (NodeId n : label.nodes) {
                if (n >= ds.n_nodes) {
                    throw Error(fmt::format("node id {} >= n_nodes {}", n, ds.n_nodes));
                }
            }
            ds.labels.push_back(std::move(label));
        } catch (const Error& e) {
            throw Error(fmt::format("{}: row {}: {}", labels_path.string(), row, e.what()));
        }
    }
    if (stats) *stats = std::move(local);
    return ds;
}

void write_dataset(const ClusterDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

    for (std::size_t i = 0; i < ds.n_nodes; ++i) {
        std::string content;
        for (const auto& e : ds.entries[i]) {
            content += format_log_line(e);
            content += '\n';
        }
        write_atomically(dir / fmt::format("node_{}.log", i), content);
    }
    std::string csv = "start_ts_ms,end_ts_ms,anomaly_no,node_ids\n";
    for (const auto& l : ds.labels) {
        std::string ids;
        for (NodeId n : l.nodes) {
            if (!ids.empty()) ids += ';';
            ids += std::to_string(n);
        }
        csv += fmt::format("{},{},{},{}\n", l.start_ts, l.end_ts, l.anomaly_no, ids);
    }
    write_atomically(dir / "labels.csv", csv);
    write_atomically(dir / "manifest.txt", fmt::format("n_nodes={}\nscenario={}\n", ds.n_nodes,
                                                       to_string(ds.scenario)));
}

bool is_anomalous_at(std::span<const AnomalyLabel> labels, NodeId node, TimestampMs t0,
                     TimestampMs t1) {
    return std::any_of(labels.begin(), labels.end(), [&](const AnomalyLabel& l) {
        return l.start_ts <= t1 && t0 <= l.end_ts && l.nodes.contains(node);
    });
}

bool any_anomaly_in(std::span<const AnomalyLabel> labels, TimestampMs t0, TimestampMs t1) {
    return std::any_of(labels.begin(), labels.end(), [&](const AnomalyLabel& l) {
        return l.start_ts <= t1 && t0 <= l.end_ts;
    });
}

}  // namespace multilog
