// SPDX-License-Identifier: Apache-2.0
//
// The three per-group views fed to the standalone estimator:
//   sequential    one learnable vector per event id, PAD fixed at zero
//   quantitative  running event-count vectors over the group prefix
//   semantic      per-event TF-IDF weighted average of word vectors
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "multilog/drain.hpp"
#include "multilog/windowing.hpp"

namespace multilog {

/// Event-id space shared by the embedding tables: ids [0, templates) are
/// mined templates, `templates` is OOV and `templates + 1` is PAD.
struct EventSpace {
    std::size_t templates = 0;

    EventId oov() const { return static_cast<EventId>(templates); }
    EventId pad() const { return static_cast<EventId>(templates + 1); }
    /// Rows of an embedding table (templates + OOV + PAD).
    std::size_t table_size() const { return templates + 2; }
    /// Length of a count vector (templates + OOV bucket).
    std::size_t count_size() const { return templates + 1; }
};

/// Columns are positions: column m is table.col(events[m]); PAD columns are zero.
Eigen::MatrixXd sequential_embed(const Group& group, const Eigen::MatrixXd& table, EventSpace space);

using CountVector = std::vector<std::uint32_t>;

/// Final count vector over the whole group (PAD excluded).
CountVector count_vector(const Group& group, EventSpace space);

/// Column m holds the counts of events[0..m]; the last column equals count_vector().
Eigen::MatrixXd quantitative_embed(const Group& group, EventSpace space);

/// Words of a template: wildcard and non-letter material dropped, composite
/// identifiers split at case boundaries, lowercased, stop words removed.
std::vector<std::string> preprocess_event(const std::vector<std::string>& tokens);
std::vector<std::string> preprocess_event(const EventTemplate& t);

const std::vector<std::string>& stop_words();

class WordVectorProvider {
public:
    virtual ~WordVectorProvider() = default;
    virtual std::size_t dim() const = 0;
    /// Never fails; unknown words still get a deterministic vector.
    virtual Eigen::VectorXd lookup(const std::string& word) const = 0;
};

/// Word -> seeded pseudo-random unit vector.
class HashWordVectors final : public WordVectorProvider {
public:
    explicit HashWordVectors(std::size_t dim = 300, std::uint64_t seed = 0);
    std::size_t dim() const override { return dim_; }
    Eigen::VectorXd lookup(const std::string& word) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Text vectors, one "word v1 ... vd" per line (an optional "count dim"
/// header line is skipped). Words missing from the file fall back to hashing.
class FileWordVectors final : public WordVectorProvider {
public:
    explicit FileWordVectors(const std::filesystem::path& path);
    std::size_t dim() const override { return dim_; }
    Eigen::VectorXd lookup(const std::string& word) const override;
    std::size_t vocabulary_size() const { return vectors_.size(); }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, Eigen::VectorXd> vectors_;
    std::unique_ptr<HashWordVectors> fallback_;
};

class TfIdfModel {
public:
    /// Each document is the word list of one template.
    static TfIdfModel fit(const std::vector<std::vector<std::string>>& documents);

    /// ln(#L / #L_w); words never seen at fit time count as #L_w = 1.
    double idf(const std::string& word) const;
    static double tf(const std::string& word, const std::vector<std::string>& words);

    std::size_t total_documents() const { return total_; }
    std::size_t document_frequency(const std::string& word) const;

private:
    std::size_t total_ = 0;
    std::map<std::string, std::size_t> doc_freq_;
};

/// (1/W) * sum over the W words of tfidf(w) * v(w); zero for an empty list.
Eigen::VectorXd semantic_vector(const std::vector<std::string>& words,
                                const WordVectorProvider& provider, const TfIdfModel& tfidf);

/// d x table_size() matrix of cached per-event semantic vectors; OOV and PAD
/// columns are zero.
Eigen::MatrixXd build_semantic_table(const TemplateRegistry& registry,
                                     const WordVectorProvider& provider, TfIdfModel* fitted = nullptr);

/// Column m = table.col(events[m]).
Eigen::MatrixXd semantic_embed(const Group& group, const Eigen::MatrixXd& semantic_table);

}  // namespace multilog
