// SPDX-License-Identifier: Apache-2.0
#include "multilog/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>

#include "multilog/text.hpp"

namespace multilog {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }

void camel_split(std::string_view run, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < run.size(); ++i) {
        const bool lower_to_upper = is_lower(run[i - 1]) && is_upper(run[i]);
        // end of an acronym: "IOException" -> IO | Exception
        const bool acronym_end = is_upper(run[i - 1]) && is_upper(run[i]) && i + 1 < run.size() &&
                                 is_lower(run[i + 1]);
        if (lower_to_upper || acronym_end) {
            out.emplace_back(run.substr(start, i - start));
            start = i;
        }
    }
    out.emplace_back(run.substr(start));
}

}  // namespace

Eigen::MatrixXd sequential_embed(const Group& group, const Eigen::MatrixXd& table, EventSpace space) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(table.rows(), static_cast<Eigen::Index>(group.events.size()));
    for (std::size_t m = 0; m < group.events.size(); ++m) {
        const EventId id = group.events[m];
        if (id == space.pad()) continue;
        out.col(static_cast<Eigen::Index>(m)) = table.col(id);
    }
    return out;
}

CountVector count_vector(const Group& group, EventSpace space) {
    CountVector counts(space.count_size(), 0);
    for (EventId id : group.events) {
        if (id == space.pad()) continue;
        ++counts[std::min<std::size_t>(id, space.oov())];
    }
    return counts;
}

Eigen::MatrixXd quantitative_embed(const Group& group, EventSpace space) {
    const auto rows = static_cast<Eigen::Index>(space.count_size());
    const auto cols = static_cast<Eigen::Index>(group.events.size());
    Eigen::MatrixXd out(rows, cols);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(rows);
    for (Eigen::Index m = 0; m < cols; ++m) {
        const EventId id = group.events[static_cast<std::size_t>(m)];
        if (id != space.pad()) running(std::min<Eigen::Index>(id, space.oov())) += 1.0;
        out.col(m) = running;
    }
    return out;
}

const std::vector<std::string>& stop_words() {
    static const std::vector<std::string> words = {
        "a",    "an",   "the",  "to",   "of",    "in",    "on",    "at",  "for",  "from",
        "by",   "with", "and",  "or",   "is",    "are",   "was",   "were", "be",  "been",
        "being", "it",  "its",  "this", "that",  "these", "those", "as",  "into", "than"};
    return words;
}

std::vector<std::string> preprocess_event(const std::vector<std::string>& tokens) {
    static const std::set<std::string, std::less<>> stops(stop_words().begin(), stop_words().end());
    std::vector<std::string> pieces;
    for (const auto& token : tokens) {
        if (token == kWildcard) continue;
        std::size_t i = 0;
        while (i < token.size()) {
            while (i < token.size() && !is_alpha(token[i])) ++i;
            std::size_t j = i;
            while (j < token.size() && is_alpha(token[j])) ++j;
            if (j > i) camel_split(std::string_view(token).substr(i, j - i), pieces);
            i = j;
        }
    }
    std::vector<std::string> words;
    for (auto& p : pieces) {
        std::transform(p.begin(), p.end(), p.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (!stops.contains(p)) words.push_back(std::move(p));
    }
    return words;
}

std::vector<std::string> preprocess_event(const EventTemplate& t) {
    return preprocess_event(t.tokens);
}

HashWordVectors::HashWordVectors(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw Error("word vector dimension must be positive");
}

Eigen::VectorXd HashWordVectors::lookup(const std::string& word) const {
    Rng rng(stable_hash(word) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    return v / v.norm();
}

FileWordVectors::FileWordVectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read word vectors {}", path.string()));
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        auto parts = split_whitespace(line);
        if (parts.empty()) continue;
        if (row == 1 && parts.size() == 2) continue;  // "count dim" header
        if (parts.size() < 2) {
            throw Error(fmt::format("{}: row {}: expected a word and values", path.string(), row));
        }
        const std::size_t d = parts.size() - 1;
        if (dim_ == 0) dim_ = d;
        if (d != dim_) {
            throw Error(fmt::format("{}: row {}: dimension {} differs from {}", path.string(), row, d, dim_));
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
            try {
                v(static_cast<Eigen::Index>(i)) = std::stod(parts[i + 1]);
            } catch (const std::exception&) {
                throw Error(fmt::format("{}: row {}: bad value '{}'", path.string(), row, parts[i + 1]));
            }
        }
        vectors_.emplace(std::move(parts[0]), std::move(v));
    }
    if (dim_ == 0) throw Error(fmt::format("{}: no vectors found", path.string()));
    fallback_ = std::make_unique<HashWordVectors>(dim_);
}

Eigen::VectorXd FileWordVectors::lookup(const std::string& word) const {
    if (auto it = vectors_.find(word); it != vectors_.end()) return it->second;
    return fallback_->lookup(word);
}

TfIdfModel TfIdfModel::fit(const std::vector<std::vector<std::string>>& documents) {
    TfIdfModel m;
    m.total_ = documents.size();
    for (const auto& doc : documents) {
        std::set<std::string> unique(doc.begin(), doc.end());
        for (const auto& w : unique) ++m.doc_freq_[w];
    }
    return m;
}

double TfIdfModel::idf(const std::string& word) const {
    if (total_ == 0) return 0.0;
    const auto df = document_frequency(word);
    return std::log(static_cast<double>(total_) / static_cast<double>(df == 0 ? 1 : df));
}

double TfIdfModel::tf(const std::string& word, const std::vector<std::string>& words) {
    if (words.empty()) return 0.0;
    const auto n = std::count(words.begin(), words.end(), word);
    return static_cast<double>(n) / static_cast<double>(words.size());
}

std::size_t TfIdfModel::document_frequency(const std::string& word) const {
    const auto it = doc_freq_.find(word);
    return it == doc_freq_.end() ? 0 : it->second;
}

Eigen::VectorXd semantic_vector(const std::vector<std::string>& words,
                                const WordVectorProvider& provider, const TfIdfModel& tfidf) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(provider.dim()));
    if (words.empty()) return v;
    for (const auto& w : words) {
        const double weight = TfIdfModel::tf(w, words) * tfidf.idf(w);
        if (weight != 0.0) v += weight * provider.lookup(w);
    }
    return v / static_cast<double>(words.size());
}

Eigen::MatrixXd build_semantic_table(const TemplateRegistry& registry,
                                     const WordVectorProvider& provider, TfIdfModel* fitted) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(registry.size());
    for (const auto& t : registry.templates()) docs.push_back(preprocess_event(t));
    const TfIdfModel tfidf = TfIdfModel::fit(docs);

    const EventSpace space{registry.size()};
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(provider.dim()),
                                                  static_cast<Eigen::Index>(space.table_size()));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        table.col(static_cast<Eigen::Index>(i)) = semantic_vector(docs[i], provider, tfidf);
    }
    if (fitted) *fitted = tfidf;
    return table;
}

Eigen::MatrixXd semantic_embed(const Group& group, const Eigen::MatrixXd& semantic_table) {
    Eigen::MatrixXd out(semantic_table.rows(), static_cast<Eigen::Index>(group.events.size()));
    for (std::size_t m = 0; m < group.events.size(); ++m) {
        out.col(static_cast<Eigen::Index>(m)) = semantic_table.col(group.events[m]);
    }
    return out;
}

}  // namespace multilog
