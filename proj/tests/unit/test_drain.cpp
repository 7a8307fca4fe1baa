// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fmt/core.h>

#include "multilog/drain.hpp"
#include "test_support.hpp"

using namespace multilog;

namespace {

struct CraftedLine {
    std::string text;
    int source;  // index of the print statement
};

// 30 lines from 4 print statements with varying parameters
std::vector<CraftedLine> crafted_corpus(std::uint64_t seed) {
    Rng rng(seed);
    const char* hosts[] = {"alpha", "beta", "gamma", "delta", "omega"};
    std::vector<CraftedLine> out;
    for (int i = 0; i < 30; ++i) {
        const int s = i % 4;
        std::string line;
        switch (s) {
            case 0: line = fmt::format("Flush a memtable to file seq-{}.tsfile", rng.below(5000)); break;
            case 1: line = fmt::format("Currently {} data", rng.below(100000)); break;
            case 2: line = fmt::format("Query served in {} ms for {} rows", rng.below(900), rng.below(90)); break;
            default: line = fmt::format("Connection from host {} closed", hosts[rng.below(5)]); break;
        }
        out.push_back({line, s});
    }
    return out;
}

}  // namespace

TEST_SUITE("drain-parser") {

TEST_CASE("first line defines its own template") {
    TemplateRegistry reg;
    CHECK(reg.parse_line("flush memtable to file") == 0);
    REQUIRE(reg.size() == 1);
    CHECK(reg.at(0).tokens == std::vector<std::string>{"flush", "memtable", "to", "file"});
}

TEST_CASE("crafted corpus of four print statements yields exactly four templates") {
    const auto corpus = crafted_corpus(5);
    TemplateRegistry reg;
    std::vector<EventId> ids;
    for (const auto& l : corpus) ids.push_back(reg.parse_line(l.text));
    CHECK(reg.size() == 4);
    // each line maps to the template of its source statement
    std::map<int, EventId> by_source;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto [it, inserted] = by_source.emplace(corpus[i].source, ids[i]);
        CHECK(it->second == ids[i]);
    }
    CHECK(by_source.size() == 4);
    std::set<EventId> distinct;
    for (const auto& [s, id] : by_source) distinct.insert(id);
    CHECK(distinct.size() == 4);
    CHECK(reg.at(by_source[3]).text() == "Connection from host [*] closed");
    CHECK(reg.at(by_source[1]).text() == "Currently [*] data");
}

TEST_CASE("frozen replay reproduces the id sequence") {
    const auto corpus = crafted_corpus(11);
    TemplateRegistry reg;
    std::vector<EventId> before;
    for (const auto& l : corpus) before.push_back(reg.parse_line(l.text));
    // parse once more unfrozen: templates may generalize but ids stay put
    std::vector<EventId> settled;
    for (const auto& l : corpus) settled.push_back(reg.parse_line(l.text));
    CHECK(settled == before);
    reg.freeze();
    std::vector<EventId> after;
    for (const auto& l : corpus) after.push_back(reg.parse_line(l.text));
    CHECK(after == before);
}

TEST_CASE("Currently 512 data matches the Currently [*] data template") {
    TemplateRegistry reg;
    const auto id = reg.parse_line("Currently 100 data");
    reg.parse_line("Currently 2048 data");
    reg.freeze();
    CHECK(reg.at(id).text() == "Currently [*] data");
    CHECK(reg.parse_line("Currently 512 data") == id);
    CHECK(reg.match("Currently 512 data") == id);
}

TEST_CASE("freeze reserves the OOV id") {
    TemplateRegistry reg;
    for (const auto& l : crafted_corpus(1)) reg.parse_line(l.text);
    reg.freeze();
    CHECK(reg.frozen());
    CHECK(reg.oov_id() == 4);
    CHECK(reg.pad_id() == 5);
    CHECK(reg.parse_line("Snapshot taken at index 7 by the leader") == reg.oov_id());
    CHECK(reg.size() == 4);
}

TEST_CASE("parsing the same line twice does not duplicate") {
    TemplateRegistry reg;
    const auto a = reg.parse_line("Cache hit ratio 93 percent");
    const auto b = reg.parse_line("Cache hit ratio 93 percent");
    CHECK(a == b);
    CHECK(reg.size() == 1);
}

TEST_CASE("an exact literal match wins over a looser template") {
    TemplateRegistry reg;
    const auto first = reg.parse_line("open file alpha beta gamma");
    const auto second = reg.parse_line("open file delta epsilon zeta");
    REQUIRE(first != second);  // 2 of 5 literals shared, below the threshold
    CHECK(reg.parse_line("open file delta epsilon zeta") == second);
    CHECK(reg.parse_line("open file alpha beta gamma") == first);
}

TEST_CASE("template count does not depend on parameter values") {
    for (std::uint64_t seed : {2, 3, 4, 5}) {
        TemplateRegistry reg;
        for (const auto& l : crafted_corpus(seed)) reg.parse_line(l.text);
        CHECK(reg.size() == 4);
    }
}

TEST_CASE("tokens containing digits are masked before descent") {
    const auto t = TemplateRegistry::tokenize("Flush a memtable to file seq-12.tsfile on node3");
    CHECK(t == std::vector<std::string>{"Flush", "a", "memtable", "to", "file", "[*]", "on", "[*]"});
}

TEST_CASE("save and load reproduce ids") {
    TemplateRegistry reg;
    const auto corpus = crafted_corpus(8);
    for (const auto& l : corpus) reg.parse_line(l.text);
    reg.freeze();
    multilog::testing::TempDir dir("drain");
    reg.save(dir / "templates.txt");
    auto back = TemplateRegistry::load(dir / "templates.txt");
    CHECK(back.frozen());
    REQUIRE(back.size() == reg.size());
    for (std::size_t i = 0; i < reg.size(); ++i) CHECK(back.at(static_cast<EventId>(i)).tokens == reg.at(static_cast<EventId>(i)).tokens);
    for (const auto& l : corpus) CHECK(back.parse_line(l.text) == reg.parse_line(l.text));
}

TEST_CASE("mine_templates only sees the training range") {
    ClusterDataset ds;
    ds.n_nodes = 1;
    ds.entries = {{{0, 10, "INFO", "Currently 5 data"}, {0, 20, "INFO", "Query served in 3 ms for 4 rows"},
                   {0, 30, "INFO", "Snapshot taken at index 9"}}};
    auto reg = mine_templates(ds, 25);
    CHECK(reg.frozen());
    CHECK(reg.size() == 2);
    const auto events = assign_events(reg, ds);
    REQUIRE(events.size() == 1);
    CHECK(events[0].events == std::vector<EventId>{0, 1, reg.oov_id()});
    CHECK(events[0].ts == std::vector<TimestampMs>{10, 20, 30});
}

}
