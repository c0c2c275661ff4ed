#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tabcheck/candidate_filter.hpp"
#include "tabcheck/contrastive.hpp"
#include "tabcheck/corpus_gen.hpp"
#include "tabcheck/pair_classifier.hpp"
#include "tabcheck/projection.hpp"

namespace tabcheck {

/// A run configuration that cannot be used: unknown keys, bad values,
/// missing inputs. The CLI reports these as usage errors.
class ConfigError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

/// Every tunable of a run. Loaded from defaults, then a flat key=value file,
/// then command-line flags.
struct RunConfig {
    std::string corpus_dir;
    std::string gold_dir;  // defaults to <corpus_dir>/gold
    std::string out_dir;

    std::string embedder = "auto";  // auto | features | projection | reference
    std::string weights;            // projection matrix file
    std::size_t dim = 64;
    FeatureConfig features;
    std::size_t max_len = 4096;

    LossParams loss;
    LossKind loss_kind = LossKind::decoupled;
    int epochs = 3;
    double learning_rate = 2.0;
    int tables_per_step = 12;

    FilterParams filter;
    std::string sweep = "0.1:0.9:0.1";

    std::string backend = "oracle";  // oracle | noisy | remote
    double noise_rate = 0.1;
    RemoteConfig remote;
    DispatchOptions dispatch;

    std::size_t chunk_size = 1024;
    std::string path_order = "greedy";  // greedy | reading

    GenConfig gen;

    // Named seeds. `seed` is the base; the others follow it unless set.
    std::uint64_t seed = 7;
    std::map<std::string, std::uint64_t> seed_overrides;
    std::uint64_t gen_seed() const;
    std::uint64_t init_seed() const;
    std::uint64_t train_seed() const;
    std::uint64_t index_seed() const;
    std::uint64_t noise_seed() const;
    std::uint64_t path_seed() const;

    unsigned workers = 0;  // 0: available cores

    /// Unknown keys and malformed values throw ConfigError.
    void apply(const std::map<std::string, std::string>& kv);
    void apply(const std::string& key, const std::string& value);
    unsigned effective_workers() const;
};

/// key=value lines; blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Documents and gold of corpus_dir (gold from gold_dir when set).
SyntheticCorpus load_corpus(const RunConfig& cfg);

std::shared_ptr<const MentionEmbedder> make_embedder(const RunConfig& cfg);
std::shared_ptr<const ClassifierBackend> make_backend(const RunConfig& cfg, const SyntheticCorpus& corpus);

/// Exit codes: 0 success, 1 stage failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tabcheck
