#include "tabcheck/corpus_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tabcheck/hashing.hpp"
#include "tabcheck/rng.hpp"

namespace tabcheck {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 16> kEntityPrefixes = {
    "Northern", "Southern", "Eastern", "Western", "Central", "Pacific", "Atlantic", "Alpine",
    "Coastal",  "Metro",    "Summit",  "Harbor",  "Prairie", "Delta",   "Crescent", "Granite"};

constexpr std::array<std::string_view, 16> kEntityNouns = {
    "Logistics", "Retail",   "Energy",  "Holdings", "Mining",   "Textiles", "Software", "Pharma",
    "Foods",     "Marine",   "Telecom", "Capital",  "Motors",   "Chemicals", "Media",   "Realty"};

constexpr std::array<std::string_view, 48> kMetrics = {
    "operating revenue",       "cost of sales",           "gross profit",
    "selling expenses",        "administrative expenses", "research expenses",
    "finance costs",           "operating profit",        "profit before tax",
    "income tax expense",      "net profit",              "total assets",
    "total liabilities",       "current assets",          "current liabilities",
    "cash equivalents",        "accounts receivable",     "notes receivable",
    "inventories",             "prepayments",             "fixed assets",
    "intangible assets",       "goodwill",                "short term borrowings",
    "long term borrowings",    "accounts payable",        "contract liabilities",
    "employee benefits payable", "taxes payable",         "share capital",
    "capital reserve",         "retained earnings",       "minority interests",
    "operating cash inflow",   "operating cash outflow",  "investing cash flow",
    "financing cash flow",     "dividends paid",          "capital expenditure",
    "depreciation",            "amortization",            "impairment losses",
    "gross margin",            "net margin",              "return on equity",
    "asset turnover",          "debt ratio",              "headcount cost"};

constexpr std::array<std::string_view, 12> kSectionTitles = {
    "Financial highlights",     "Balance sheet analysis",  "Income statement analysis",
    "Cash flow analysis",       "Segment information",     "Notes to the financial statements",
    "Related party disclosures", "Business overview",      "Risk factors",
    "Management discussion",    "Subsidiaries overview",   "Key operating data"};

constexpr std::array<std::string_view, 14> kProse = {
    "The figures below are presented in thousands of the reporting currency.",
    "Amounts are prepared in accordance with the applicable accounting standards.",
    "Management reviewed the following items as part of the periodic assessment.",
    "Certain comparative amounts have been reclassified to conform with the current presentation.",
    "The table summarizes the principal items discussed in this chapter.",
    "Readers should consider these amounts together with the accompanying notes.",
    "Balances reflect the consolidated position of the reporting group.",
    "The following disclosure was audited by the independent auditor.",
    "Movements during the periods are explained in the narrative that follows.",
    "No material subsequent events affected the amounts presented here.",
    "Figures for the segment exclude intersegment eliminations.",
    "The company continued to optimize its cost structure over the periods.",
    "Changes in the amounts were mainly driven by business expansion.",
    "These data are extracted from the statutory financial statements."};

std::string entity_name(int i) {
    const auto p = static_cast<std::size_t>(i) % kEntityPrefixes.size();
    const auto n = (static_cast<std::size_t>(i) / kEntityPrefixes.size() + static_cast<std::size_t>(i)) %
                   kEntityNouns.size();
    return std::string(kEntityPrefixes[p]) + " " + std::string(kEntityNouns[n]);
}

std::string period_name(int i) { return "FY" + std::to_string(2010 + i); }

std::string with_thousands(const std::string& int_digits) {
    std::string out;
    const std::size_t n = int_digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
        out.push_back(int_digits[i]);
    }
    return out;
}

std::string prose(Rng& rng, int min_sentences, int max_sentences) {
    const auto n = rng.uniform_int(min_sentences, max_sentences);
    std::string out;
    for (std::int64_t i = 0; i < n; ++i) {
        if (i > 0) out.push_back(' ');
        out += kProse[rng.index(kProse.size())];
    }
    return out;
}

std::string random_value_text(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.55) {
        const auto digits = rng.uniform_int(2, 6);
        const auto v = rng.uniform_int(static_cast<std::int64_t>(std::pow(10, digits - 1)),
                                       static_cast<std::int64_t>(std::pow(10, digits)) - 1);
        return with_thousands(std::to_string(v));
    }
    if (u < 0.70) {
        const auto v = rng.uniform_int(1000, 9999999);
        const auto frac = rng.uniform_int(1, 99);
        std::string f = std::to_string(frac);
        if (f.size() < 2) f.insert(0, "0");
        return with_thousands(std::to_string(v / 100)) + "." + f;
    }
    if (u < 0.85) {
        const auto v = rng.uniform_int(10, 999999);
        return "(" + with_thousands(std::to_string(v)) + ")";
    }
    const auto v = rng.uniform_int(1, 999);
    return std::to_string(v / 10) + "." + std::to_string(v % 10) + "%";
}

// One cell while a document is being assembled.
struct DraftCell {
    std::string text;
    int group = -1;  // -1: isolated (if numeric)
};

struct DraftRow {
    std::string label;
    std::vector<DraftCell> cells;  // one per period column of the table
};

struct DraftTable {
    int entity = 0;
    int first_period = 0;
    int n_periods = 0;
    std::vector<DraftRow> rows;      // append-only, so (row, col) references stay valid
    std::vector<std::size_t> display;  // row indices in rendering order

    int column_of(int period) const {
        return (period >= first_period && period < first_period + n_periods) ? period - first_period : -1;
    }
};

std::vector<int> sample_group_sizes(const GenConfig& cfg, Rng& rng) {
    std::vector<int> sizes;
    if (cfg.group_count > 0) {
        for (int g = 0; g < cfg.group_count; ++g)
            sizes.push_back(static_cast<int>(rng.uniform_int(cfg.group_size_min, cfg.group_size_max)));
        return sizes;
    }
    int remaining = static_cast<int>(std::lround((1.0 - cfg.isolated_fraction) * cfg.mentions_per_doc_target));
    if (remaining > 0 && remaining < cfg.group_size_min) remaining = cfg.group_size_min;
    while (remaining > 0) {
        int k;
        if (remaining <= cfg.group_size_max) {
            k = remaining;
        } else {
            const int hi = std::min(cfg.group_size_max, remaining - cfg.group_size_min);
            k = static_cast<int>(rng.uniform_int(cfg.group_size_min, std::max(cfg.group_size_min, hi)));
        }
        sizes.push_back(k);
        remaining -= k;
    }
    return sizes;
}

struct GeneratedDoc {
    Document doc;
    GoldAnnotation gold;
};

GeneratedDoc generate_document(const GenConfig& cfg, int doc_index, Rng& rng) {
    const std::vector<int> group_sizes = sample_group_sizes(cfg, rng);
    int extra = 0;
    for (int k : group_sizes) {
        if (k > cfg.tables_per_doc)
            throw InfeasibleConfig("group of size " + std::to_string(k) + " needs more than " +
                                   std::to_string(cfg.tables_per_doc) + " tables");
        extra += k - 1;
    }
    const int base_cells = cfg.mentions_per_doc_target - extra;
    if (base_cells < static_cast<int>(group_sizes.size()))
        throw InfeasibleConfig("group sizes exceed the mention budget");

    // Periods covered by the document, then one contiguous window per table.
    const int doc_first_period = static_cast<int>(rng.uniform_int(0, cfg.period_vocab - cfg.cols_max));
    std::vector<int> entities(static_cast<std::size_t>(cfg.entity_vocab));
    std::iota(entities.begin(), entities.end(), 0);
    rng.shuffle(std::span(entities));

    std::vector<DraftTable> tables(static_cast<std::size_t>(cfg.tables_per_doc));
    for (std::size_t t = 0; t < tables.size(); ++t) {
        auto& tab = tables[t];
        tab.entity = entities[t];
        tab.n_periods = static_cast<int>(rng.uniform_int(cfg.cols_min, cfg.cols_max));
        tab.first_period = doc_first_period + static_cast<int>(rng.uniform_int(0, cfg.cols_max - tab.n_periods));
    }

    // Row counts: grow random tables from rows_min until the base budget is met.
    std::vector<int> n_rows(tables.size(), cfg.rows_min);
    auto capacity = [&]() {
        int s = 0;
        for (std::size_t t = 0; t < tables.size(); ++t) s += n_rows[t] * tables[t].n_periods;
        return s;
    };
    while (capacity() < base_cells) {
        std::vector<std::size_t> growable;
        for (std::size_t t = 0; t < tables.size(); ++t)
            if (n_rows[t] < cfg.rows_max) growable.push_back(t);
        if (growable.empty()) throw InfeasibleConfig("mention target exceeds table capacity");
        ++n_rows[growable[rng.index(growable.size())]];
    }
    const int surplus = capacity() - base_cells;  // left as empty cells

    std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> base_cells_list;
    for (std::size_t t = 0; t < tables.size(); ++t) {
        auto& tab = tables[t];
        std::vector<int> metrics(static_cast<std::size_t>(cfg.metric_vocab));
        std::iota(metrics.begin(), metrics.end(), 0);
        rng.shuffle(std::span(metrics));
        const std::string entity = entity_name(tab.entity);
        for (int r = 0; r < n_rows[t]; ++r) {
            DraftRow row;
            row.label = entity + " " + std::string(kMetrics[static_cast<std::size_t>(metrics[static_cast<std::size_t>(r)])]);
            row.cells.resize(static_cast<std::size_t>(tab.n_periods));
            for (std::size_t c = 0; c < row.cells.size(); ++c)
                base_cells_list.push_back({t, {tab.rows.size(), c}});
            tab.display.push_back(tab.rows.size());
            tab.rows.push_back(std::move(row));
        }
    }
    rng.shuffle(std::span(base_cells_list));
    base_cells_list.erase(base_cells_list.begin(), base_cells_list.begin() + surplus);
    std::sort(base_cells_list.begin(), base_cells_list.end());
    for (const auto& [t, rc] : base_cells_list) tables[t].rows[rc.first].cells[rc.second].text = random_value_text(rng);

    // Plant each group: a source base cell copied into k-1 other tables that cover its period.
    rng.shuffle(std::span(base_cells_list));
    std::size_t next_source = 0;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        const int k = group_sizes[g];
        bool placed = false;
        while (!placed && next_source < base_cells_list.size()) {
            const auto [src_t, rc] = base_cells_list[next_source++];
            const auto [src_r, src_c] = rc;
            if (tables[src_t].rows[src_r].cells[src_c].group >= 0) continue;  // already a copy of another group
            const int period = tables[src_t].first_period + static_cast<int>(src_c);
            const std::string label = tables[src_t].rows[src_r].label;
            std::vector<std::size_t> eligible;
            for (std::size_t t = 0; t < tables.size(); ++t) {
                if (t == src_t || tables[t].column_of(period) < 0) continue;
                const auto& rows = tables[t].rows;
                auto same = std::find_if(rows.begin(), rows.end(), [&](const DraftRow& r) { return r.label == label; });
                if (same != rows.end() && same->cells[static_cast<std::size_t>(tables[t].column_of(period))].group >= 0)
                    continue;
                eligible.push_back(t);
            }
            if (static_cast<int>(eligible.size()) < k - 1) continue;
            rng.shuffle(std::span(eligible));
            auto& src_cell = tables[src_t].rows[src_r].cells[src_c];
            src_cell.group = static_cast<int>(g);
            const std::string text = src_cell.text;
            for (int m = 0; m < k - 1; ++m) {
                auto& dst = tables[eligible[static_cast<std::size_t>(m)]];
                auto row_it = std::find_if(dst.rows.begin(), dst.rows.end(),
                                           [&](const DraftRow& r) { return r.label == label; });
                if (row_it == dst.rows.end()) {
                    DraftRow row;
                    row.label = label;
                    row.cells.resize(static_cast<std::size_t>(dst.n_periods));
                    const auto at = static_cast<std::ptrdiff_t>(rng.uniform_int(0, static_cast<std::int64_t>(dst.rows.size())));
                    dst.display.insert(dst.display.begin() + at, dst.rows.size());
                    dst.rows.push_back(std::move(row));
                    row_it = dst.rows.end() - 1;
                }
                auto& cell = row_it->cells[static_cast<std::size_t>(dst.column_of(period))];
                cell.text = text;
                cell.group = static_cast<int>(g);
            }
            placed = true;
        }
        if (!placed) throw InfeasibleConfig("could not place equivalence group " + std::to_string(g));
    }

    // Reading order is a random permutation of the drafted tables.
    std::vector<std::size_t> order(tables.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));

    GeneratedDoc out;
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "doc_%04d", doc_index);
    out.doc.doc_id = id_buf;
    out.doc.doc_type = DocType::synthetic;
    out.gold.doc_id = out.doc.doc_id;
    out.gold.equivalence_groups.resize(group_sizes.size());

    const auto n_sections = std::min<std::size_t>(kSectionTitles.size(), 3 + rng.index(3));
    std::vector<std::size_t> section_titles(kSectionTitles.size());
    std::iota(section_titles.begin(), section_titles.end(), 0);
    rng.shuffle(std::span(section_titles));
    for (std::size_t s = 0; s < n_sections; ++s)
        out.doc.sections.push_back(Section{"s" + std::to_string(s), std::string(kSectionTitles[section_titles[s]])});

    MentionId next_id = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const DraftTable& tab = tables[order[pos]];
        const std::size_t section = std::min(n_sections - 1, pos * n_sections / order.size());
        std::vector<std::vector<std::string>> grid;
        auto& header = grid.emplace_back();
        header.push_back("Item");
        for (int p = 0; p < tab.n_periods; ++p) header.push_back(period_name(tab.first_period + p));
        for (std::size_t r : tab.display) {
            const DraftRow& row = tab.rows[r];
            auto& line = grid.emplace_back();
            line.push_back(row.label);
            for (const auto& cell : row.cells) {
                line.push_back(cell.text);
                if (!cell.text.empty()) {
                    if (cell.group >= 0) out.gold.equivalence_groups[static_cast<std::size_t>(cell.group)].push_back(next_id);
                    ++next_id;
                }
            }
        }
        const std::string entity = entity_name(tab.entity);
        const std::string& chapter = out.doc.sections[section].title;
        std::string before = "This part reports figures of " + entity + ". " + prose(rng, 1, 10);
        std::string after = prose(rng, 0, 4);
        out.doc.tables.push_back(make_table("t" + std::to_string(pos), "s" + std::to_string(section),
                                            chapter + " of " + entity, std::move(before), std::move(after), grid));
    }
    return out;
}

}  // namespace

void GenConfig::validate() const {
    auto fail = [](const std::string& m) { throw InfeasibleConfig(m); };
    if (n_docs < 0) fail("n_docs must be >= 0");
    if (tables_per_doc < 2) fail("tables_per_doc must be >= 2");
    if (rows_min < 1 || rows_max < rows_min) fail("invalid rows range");
    if (cols_min < 1 || cols_max < cols_min) fail("invalid cols range");
    if (group_size_min < 2 || group_size_max < group_size_min) fail("invalid group size range");
    if (!(isolated_fraction >= 0.0 && isolated_fraction <= 1.0)) fail("isolated_fraction must be in [0,1]");
    if (!(inconsistency_rate >= 0.0 && inconsistency_rate <= 1.0)) fail("inconsistency_rate must be in [0,1]");
    if (entity_vocab < tables_per_doc) fail("entity_vocab must be >= tables_per_doc");
    if (period_vocab < cols_max) fail("period_vocab must be >= cols_max");
    if (metric_vocab < rows_max || metric_vocab > static_cast<int>(kMetrics.size()))
        fail("metric_vocab must be in [rows_max, " + std::to_string(kMetrics.size()) + "]");
    if (entity_vocab > static_cast<int>(kEntityPrefixes.size() * kEntityNouns.size()))
        fail("entity_vocab too large");
    if (mentions_per_doc_target < 1) fail("mentions_per_doc_target must be >= 1");
}

void GenConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        try {
            if (key == "n_docs") n_docs = std::stoi(value);
            else if (key == "tables_per_doc") tables_per_doc = std::stoi(value);
            else if (key == "rows_min") rows_min = std::stoi(value);
            else if (key == "rows_max") rows_max = std::stoi(value);
            else if (key == "cols_min") cols_min = std::stoi(value);
            else if (key == "cols_max") cols_max = std::stoi(value);
            else if (key == "mentions_per_doc_target") mentions_per_doc_target = std::stoi(value);
            else if (key == "group_count") group_count = std::stoi(value);
            else if (key == "group_size_min") group_size_min = std::stoi(value);
            else if (key == "group_size_max") group_size_max = std::stoi(value);
            else if (key == "isolated_fraction") isolated_fraction = std::stod(value);
            else if (key == "entity_vocab") entity_vocab = std::stoi(value);
            else if (key == "period_vocab") period_vocab = std::stoi(value);
            else if (key == "metric_vocab") metric_vocab = std::stoi(value);
            else if (key == "inconsistency_rate") inconsistency_rate = std::stod(value);
            else if (key == "rng_seed") rng_seed = std::stoull(value);
            else throw SchemaError("unknown generator key '" + key + "'");
        } catch (const std::logic_error&) {
            throw SchemaError("bad value for '" + key + "': " + value);
        }
    }
}

std::map<std::string, std::string> GenConfig::to_kv() const {
    std::ostringstream iso, inc;
    iso << isolated_fraction;
    inc << inconsistency_rate;
    return {{"n_docs", std::to_string(n_docs)},
            {"tables_per_doc", std::to_string(tables_per_doc)},
            {"rows_min", std::to_string(rows_min)},
            {"rows_max", std::to_string(rows_max)},
            {"cols_min", std::to_string(cols_min)},
            {"cols_max", std::to_string(cols_max)},
            {"mentions_per_doc_target", std::to_string(mentions_per_doc_target)},
            {"group_count", std::to_string(group_count)},
            {"group_size_min", std::to_string(group_size_min)},
            {"group_size_max", std::to_string(group_size_max)},
            {"isolated_fraction", iso.str()},
            {"entity_vocab", std::to_string(entity_vocab)},
            {"period_vocab", std::to_string(period_vocab)},
            {"metric_vocab", std::to_string(metric_vocab)},
            {"inconsistency_rate", inc.str()},
            {"rng_seed", std::to_string(rng_seed)}};
}

double expected_pos_neg_ratio(const GenConfig& cfg) {
    double mean_k = 0.0;
    double mean_pairs = 0.0;
    const int span = cfg.group_size_max - cfg.group_size_min + 1;
    for (int k = cfg.group_size_min; k <= cfg.group_size_max; ++k) {
        mean_k += static_cast<double>(k) / span;
        mean_pairs += k * (k - 1) / 2.0 / span;
    }
    const double n = cfg.mentions_per_doc_target;
    const double grouped = cfg.group_count > 0 ? cfg.group_count * mean_k : (1.0 - cfg.isolated_fraction) * n;
    const double pos = grouped / mean_k * mean_pairs;
    const double total = n * (n - 1) / 2.0;
    return pos / (total - pos);
}

double measured_pos_neg_ratio(const SyntheticCorpus& corpus) {
    double pos = 0.0;
    double total = 0.0;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
        const double n = static_cast<double>(extract_mentions(corpus.documents[d]).size());
        total += n * (n - 1) / 2.0;
        pos += static_cast<double>(corpus.gold[d].pairs().size());
    }
    return pos / (total - pos);
}

SyntheticCorpus generate_corpus(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    SyntheticCorpus corpus;
    for (int d = 0; d < cfg.n_docs; ++d) {
        auto gen = generate_document(cfg, d, rng);
        corpus.documents.push_back(std::move(gen.doc));
        corpus.gold.push_back(std::move(gen.gold));
    }
    if (cfg.inconsistency_rate > 0.0)
        corpus = inject_inconsistencies(std::move(corpus), cfg.inconsistency_rate, mix64(cfg.rng_seed ^ 0x1badc0deULL));
    return corpus;
}

std::string render_like(const NumericValue& value, std::string_view style_of) {
    const bool thousands = style_of.find(',') != std::string_view::npos;
    const bool parens = style_of.find('(') != std::string_view::npos;
    std::size_t min_decimals = 0;
    if (auto dot = style_of.find('.'); dot != std::string_view::npos) {
        std::size_t i = dot + 1;
        while (i < style_of.size() && style_of[i] >= '0' && style_of[i] <= '9') ++i;
        min_decimals = i - dot - 1;
    }
    std::string digits = value.digits();
    std::size_t scale = value.scale();
    while (scale < min_decimals) {
        digits.push_back('0');
        ++scale;
    }
    std::string int_part = digits.substr(0, digits.size() - scale);
    const std::string frac_part = digits.substr(digits.size() - scale);
    if (thousands) int_part = with_thousands(int_part);
    std::string body = int_part + (scale > 0 ? "." + frac_part : "");
    if (value.is_percent()) body += "%";
    if (value.is_negative()) return parens ? "(" + body + ")" : "-" + body;
    return body;
}

SyntheticCorpus inject_inconsistencies(SyntheticCorpus corpus, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw InfeasibleConfig("inconsistency rate must be in [0,1]");
    if (rate == 0.0) return corpus;
    Rng rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // (doc, group)
    for (std::size_t d = 0; d < corpus.gold.size(); ++d)
        for (std::size_t g = 0; g < corpus.gold[d].equivalence_groups.size(); ++g) groups.emplace_back(d, g);
    rng.shuffle(std::span(groups));
    const auto n_pick = static_cast<std::size_t>(std::lround(rate * static_cast<double>(groups.size())));
    groups.resize(std::min(n_pick, groups.size()));
    std::sort(groups.begin(), groups.end());

    std::vector<std::vector<NumericalMention>> mentions(corpus.documents.size());
    for (const auto& [d, g] : groups) {
        Document& doc = corpus.documents[d];
        if (mentions[d].empty()) mentions[d] = extract_mentions(doc);
        const auto& group = corpus.gold[d].equivalence_groups[g];
        const MentionId victim = group[rng.index(group.size())];
        const NumericalMention& m = mentions[d][static_cast<std::size_t>(victim)];

        std::uint32_t decimals = 0;
        if (auto dot = m.raw_text.find('.'); dot != std::string::npos) {
            std::size_t i = dot + 1;
            while (i < m.raw_text.size() && m.raw_text[i] >= '0' && m.raw_text[i] <= '9') ++i;
            decimals = static_cast<std::uint32_t>(i - dot - 1);
        }
        auto step = rng.uniform_int(1, 9);
        if (rng.bernoulli(0.5)) step = -step;
        const NumericValue delta(NumericValue::Mantissa(step), decimals, m.value.is_percent());
        const NumericValue perturbed = m.value + delta;
        const std::string raw = render_like(perturbed, m.raw_text);

        Table& table = doc.tables[m.table_index];
        table.cells[m.row * table.n_cols + m.col].raw_text = raw;

        PlantedInconsistency p;
        p.doc_id = doc.doc_id;
        p.group_index = g;
        p.perturbed_mention = victim;
        p.original_raw = m.raw_text;
        p.perturbed_raw = raw;
        p.original_value = m.value;
        p.perturbed_value = perturbed;
        for (MentionId other : group)
            if (other != victim) p.pairs.push_back(PairKey::of(victim, other));
        std::sort(p.pairs.begin(), p.pairs.end());
        corpus.planted_inconsistencies.push_back(std::move(p));
    }
    return corpus;
}

json planted_to_json(const PlantedInconsistency& p) {
    json pairs = json::array();
    for (const auto& k : p.pairs) pairs.push_back({k.first, k.second});
    return {{"doc_id", p.doc_id},
            {"group_index", p.group_index},
            {"perturbed_mention", p.perturbed_mention},
            {"original_raw", p.original_raw},
            {"perturbed_raw", p.perturbed_raw},
            {"original_value", p.original_value.to_string()},
            {"perturbed_value", p.perturbed_value.to_string()},
            {"pairs", std::move(pairs)}};
}

PlantedInconsistency planted_from_json(const json& j) {
    try {
        PlantedInconsistency p;
        p.doc_id = j.at("doc_id").get<std::string>();
        p.group_index = j.at("group_index").get<std::size_t>();
        p.perturbed_mention = j.at("perturbed_mention").get<MentionId>();
        p.original_raw = j.at("original_raw").get<std::string>();
        p.perturbed_raw = j.at("perturbed_raw").get<std::string>();
        p.original_value = NumericValue::from_canonical(j.at("original_value").get<std::string>());
        p.perturbed_value = NumericValue::from_canonical(j.at("perturbed_value").get<std::string>());
        for (const auto& pair : j.at("pairs")) p.pairs.push_back(PairKey::of(pair.at(0).get<MentionId>(), pair.at(1).get<MentionId>()));
        return p;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("planted record: ") + e.what());
    }
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw SchemaError("cannot write " + p.string());
    out << content;
}

}  // namespace

void write_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
    fs::create_directories(dir / "docs");
    fs::create_directories(dir / "gold");
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
        const auto& doc = corpus.documents[d];
        write_file(dir / "docs" / (doc.doc_id + ".json"), serialize_document(doc) + "\n");
        write_file(dir / "gold" / (doc.doc_id + ".json"), gold_to_json(corpus.gold[d]).dump() + "\n");
    }
    std::string planted;
    for (const auto& p : corpus.planted_inconsistencies) planted += planted_to_json(p).dump() + "\n";
    write_file(dir / "planted.jsonl", planted);
}

SyntheticCorpus read_corpus(const fs::path& dir) {
    SyntheticCorpus corpus;
    std::vector<fs::path> files;
    if (!fs::is_directory(dir / "docs")) throw SchemaError("no docs/ directory under " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir / "docs"))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        corpus.documents.push_back(parse_document(read_file(f)));
        const fs::path gold = dir / "gold" / f.filename();
        if (fs::exists(gold)) {
            corpus.gold.push_back(parse_gold(read_file(gold)));
        } else {
            corpus.gold.push_back(GoldAnnotation{corpus.documents.back().doc_id, {}});
        }
    }
    if (fs::exists(dir / "planted.jsonl")) {
        std::istringstream lines(read_file(dir / "planted.jsonl"));
        std::string line;
        while (std::getline(lines, line))
            if (!line.empty()) corpus.planted_inconsistencies.push_back(planted_from_json(json::parse(line)));
    }
    return corpus;
}

}  // namespace tabcheck
