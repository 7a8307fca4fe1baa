// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "multilog/embeddings.hpp"
#include "test_support.hpp"

using namespace multilog;

namespace {

Group make_group(std::vector<EventId> events) {
    Group g;
    g.events = std::move(events);
    return g;
}

Group random_group(Rng& rng, EventSpace space, std::size_t m) {
    Group g;
    const std::size_t real = rng.below(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        g.events.push_back(i < real ? static_cast<EventId>(rng.below(space.templates + 1)) : space.pad());
    }
    return g;
}

}  // namespace

TEST_SUITE("embeddings") {

TEST_CASE("sequential embedding") {
    const EventSpace space{4};
    Rng rng(1);
    Eigen::MatrixXd table = Eigen::MatrixXd::Random(3, static_cast<Eigen::Index>(space.table_size()));

    SUBCASE("all-PAD group gives zero vectors") {
        const auto e = sequential_embed(make_group(std::vector<EventId>(5, space.pad())), table, space);
        CHECK(e.cols() == 5);
        CHECK(e.isZero(0.0));
    }
    SUBCASE("single event picks its table column") {
        const auto e = sequential_embed(make_group({3}), table, space);
        CHECK(e.cols() == 1);
        CHECK(e.col(0) == table.col(3));
    }
    SUBCASE("matches naive per-position indexing") {
        for (int trial = 0; trial < 50; ++trial) {
            const auto g = random_group(rng, space, 8);
            const auto e = sequential_embed(g, table, space);
            for (std::size_t m = 0; m < g.events.size(); ++m) {
                const auto col = e.col(static_cast<Eigen::Index>(m));
                if (g.events[m] == space.pad()) {
                    CHECK(col.isZero(0.0));
                } else {
                    CHECK(col == table.col(g.events[m]));
                }
            }
        }
    }
}

TEST_CASE("quantitative embedding") {
    SUBCASE("events a a b over three templates") {
        const EventSpace space{3};
        const auto g = make_group({0, 0, 1});
        const auto c = count_vector(g, space);
        CHECK(c == CountVector{2, 1, 0, 0});
        const auto q = quantitative_embed(g, space);
        CHECK(q.col(0)(0) == 1.0);
        CHECK(q.col(2)(0) == 2.0);
        CHECK(q.col(2)(1) == 1.0);
    }
    SUBCASE("all-PAD group gives zeros") {
        const EventSpace space{3};
        CHECK(quantitative_embed(make_group(std::vector<EventId>(4, space.pad())), space).isZero(0.0));
    }
    SUBCASE("final counts match a frequency scan on random groups") {
        const EventSpace space{6};
        Rng rng(2);
        for (int trial = 0; trial < 100; ++trial) {
            const auto g = random_group(rng, space, 10);
            CountVector scan(space.count_size(), 0);
            std::size_t pads = 0;
            for (auto e : g.events) {
                if (e == space.pad()) ++pads;
                else ++scan[e];
            }
            CHECK(count_vector(g, space) == scan);
            const auto q = quantitative_embed(g, space);
            for (std::size_t k = 0; k < scan.size(); ++k) CHECK(q(static_cast<Eigen::Index>(k), q.cols() - 1) == scan[k]);
            // prefix-monotone and sum + PAD count = M
            for (Eigen::Index m = 1; m < q.cols(); ++m) CHECK((q.col(m) - q.col(m - 1)).minCoeff() >= 0.0);
            CHECK(static_cast<std::size_t>(q.col(q.cols() - 1).sum()) + pads == g.events.size());
        }
    }
}

TEST_CASE("preprocess_event") {
    CHECK(preprocess_event(std::vector<std::string>{"NullPointerException"}) ==
          std::vector<std::string>{"null", "pointer", "exception"});
    CHECK(preprocess_event(std::vector<std::string>{"the", "[*]", "!!"}).empty());
    CHECK(preprocess_event(std::vector<std::string>{"flush", "a", "memtable", "to", "file"}) ==
          std::vector<std::string>{"flush", "memtable", "file"});
    CHECK(preprocess_event(std::vector<std::string>{"HTTPServer", "seq-[*].tsfile"}) ==
          std::vector<std::string>{"http", "server", "seq", "tsfile"});
    CHECK(stop_words().size() == 30);
}

TEST_CASE("TF and IDF") {
    CHECK(TfIdfModel::tf("disk", {"disk", "slow", "disk", "write"}) == doctest::Approx(0.5));
    const auto model = TfIdfModel::fit({{"flush", "memtable"}, {"flush", "file"}, {"flush", "query"}});
    CHECK(model.total_documents() == 3);
    CHECK(model.idf("flush") == 0.0);
    CHECK(model.idf("memtable") == doctest::Approx(std::log(3.0)));
    CHECK(model.idf("never") == doctest::Approx(std::log(3.0)));
    CHECK(model.document_frequency("flush") == 3);
    for (const auto* w : {"flush", "memtable", "file", "query"}) CHECK(model.idf(w) >= 0.0);
}

TEST_CASE("semantic vectors") {
    const HashWordVectors provider(16, 5);
    SUBCASE("hash vectors are deterministic unit vectors") {
        CHECK(provider.lookup("disk") == HashWordVectors(16, 5).lookup("disk"));
        CHECK(provider.lookup("disk").norm() == doctest::Approx(1.0));
        CHECK(provider.lookup("disk") != provider.lookup("memory"));
    }
    SUBCASE("a word present in every document contributes nothing") {
        const auto model = TfIdfModel::fit({{"flush", "memtable"}, {"flush", "file"}});
        const auto v = semantic_vector({"flush"}, provider, model);
        CHECK(v.isZero(0.0));
    }
    SUBCASE("uniform weights give a vector proportional to the mean") {
        const auto model = TfIdfModel::fit({{"alpha", "beta"}, {"gamma"}, {"delta"}});
        const std::vector<std::string> words = {"alpha", "beta"};
        const auto v = semantic_vector(words, provider, model);
        const Eigen::VectorXd mean = (provider.lookup("alpha") + provider.lookup("beta")) / 2.0;
        // both words: tf 1/2, idf ln 3
        CHECK((v - mean * 0.5 * std::log(3.0)).norm() < 1e-12);
    }
    SUBCASE("weighted sum oracle") {
        const auto model = TfIdfModel::fit({{"disk", "slow", "disk"}, {"disk", "write"}, {"cache"}});
        const std::vector<std::string> words = {"disk", "slow", "disk"};
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(16);
        for (const auto& w : words) expected += TfIdfModel::tf(w, words) * model.idf(w) * provider.lookup(w);
        expected /= 3.0;
        CHECK((semantic_vector(words, provider, model) - expected).norm() < 1e-12);
        CHECK(semantic_vector({}, provider, model).isZero(0.0));
    }
}

TEST_CASE("semantic table is cached per template with zero OOV and PAD") {
    TemplateRegistry reg;
    reg.parse_line("Disk IO wait time exceeds 40 ms");
    reg.parse_line("Memory usage reaches 900 MB exceeding limit");
    reg.parse_line("the 5");
    reg.freeze();
    const HashWordVectors provider(8, 1);
    TfIdfModel fitted;
    const auto table = build_semantic_table(reg, provider, &fitted);
    REQUIRE(table.cols() == 5);
    CHECK(table.col(reg.oov_id()).isZero(0.0));
    CHECK(table.col(reg.pad_id()).isZero(0.0));
    CHECK(table.col(2).isZero(0.0));  // template with no words
    for (EventId id = 0; id < 2; ++id) {
        const auto words = preprocess_event(reg.at(id));
        CHECK((table.col(id) - semantic_vector(words, provider, fitted)).norm() < 1e-12);
    }
    Group g;
    g.events = {1, 0, reg.pad_id()};
    const auto e = semantic_embed(g, table);
    CHECK(e.col(0) == table.col(1));
    CHECK(e.col(2).isZero(0.0));
}

TEST_CASE("file word vectors with a header and hashed fallback") {
    multilog::testing::TempDir dir("words");
    multilog::testing::write_file(dir / "vec.txt", "2 3\ndisk 1 0 0\nslow 0 0.5 0\n");
    const FileWordVectors words(dir / "vec.txt");
    CHECK(words.dim() == 3);
    CHECK(words.vocabulary_size() == 2);
    CHECK(words.lookup("slow")(1) == 0.5);
    const auto unknown = words.lookup("memory");
    CHECK(unknown.size() == 3);
    CHECK(unknown == words.lookup("memory"));
}

}
