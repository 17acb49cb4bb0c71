#include "mgtkit/profiling.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace mgtkit {

namespace {

const FeatureRegistry& reg() { return FeatureRegistry::instance(); }

std::size_t fidx(std::string_view name) {
    auto i = reg().index_of(name);
    if (!i) throw SchemaError("feature '" + std::string(name) + "' not in registry");
    return *i;
}

bool is_punct(const Token& t) { return t.upos == Upos::PUNCT; }

bool is_lexical(const Token& t) {
    switch (t.upos) {
        case Upos::ADJ:
        case Upos::ADV:
        case Upos::NOUN:
        case Upos::PROPN:
        case Upos::VERB:
            return true;
        default:
            return false;
    }
}

std::string_view feat_of(const Token& t, const char* key) {
    auto it = t.feats.find(key);
    return it == t.feats.end() ? std::string_view{} : std::string_view(it->second);
}

std::string xpos_suffix(const std::string& xpos) {
    static const std::unordered_map<std::string, std::string> table = [] {
        std::unordered_map<std::string, std::string> m;
        const std::pair<const char*, const char*> entries[] = {
            {"CC", "CC"}, {"CD", "CD"}, {"DT", "DT"}, {"EX", "EX"}, {"FW", "FW"},
            {"IN", "IN"}, {"JJ", "JJ"}, {"JJR", "JJR"}, {"JJS", "JJS"}, {"LS", "LS"},
            {"MD", "MD"}, {"NN", "NN"}, {"NNP", "NNP"}, {"NNPS", "NNPS"}, {"NNS", "NNS"},
            {"PDT", "PDT"}, {"POS", "POS"}, {"PRP", "PRP"}, {"PRP$", "PRP_POSS"},
            {"RB", "RB"}, {"RBR", "RBR"}, {"RBS", "RBS"}, {"RP", "RP"}, {"SYM", "SYM"},
            {"TO", "TO"}, {"UH", "UH"}, {"VB", "VB"}, {"VBD", "VBD"}, {"VBG", "VBG"},
            {"VBN", "VBN"}, {"VBP", "VBP"}, {"VBZ", "VBZ"}, {"WDT", "WDT"}, {"WP", "WP"},
            {"WP$", "WP_POSS"}, {"WRB", "WRB"}, {"ADD", "ADD"}, {"AFX", "AFX"},
            {"GW", "GW"}, {"HYPH", "HYPH"}, {"NFP", "NFP"}, {"XX", "XX"},
            {".", "PERIOD"}, {",", "COMMA"}, {":", "COLON"}, {"''", "CLOSEQUOTE"},
            {"``", "OPENQUOTE"}, {"-LRB-", "LRB"}, {"-RRB-", "RRB"}, {"$", "CURRENCY"}};
        for (auto& [k, v] : entries) m.emplace(k, v);
        return m;
    }();
    auto it = table.find(xpos);
    return it == table.end() ? "OTHER" : it->second;
}

// Share features: each key's count divided by the total, masked family when
// the total is zero.
void fill_distribution(FeatureVector& out, std::string_view prefix,
                       const std::map<std::string, std::size_t>& counts, std::size_t total,
                       std::span<const char* const> keys) {
    for (const char* key : keys) {
        std::size_t i = fidx(std::string(prefix) + key);
        if (total == 0) {
            out.mask(i);
        } else {
            auto it = counts.find(key);
            out.set(i, it == counts.end() ? 0.0 : static_cast<double>(it->second) / total);
        }
    }
}

std::vector<const Token*> all_tokens(const Document& doc) {
    std::vector<const Token*> out;
    for (const Sentence& s : doc.sentences)
        for (const Token& t : s.tokens) out.push_back(&t);
    return out;
}

// Height of each root in the forest induced on `members` by nearest-ancestor
// nesting (following head links within a sentence). Returns one height per
// forest root.
std::vector<int> nesting_chain_heights(const Sentence& s, const std::vector<bool>& member) {
    int n = static_cast<int>(s.tokens.size());
    std::vector<int> parent(n + 1, 0);   // forest parent (token index), 0 = none
    for (int i = 1; i <= n; ++i) {
        if (!member[i]) continue;
        int cur = s.tokens[i - 1].head;
        while (cur != 0 && !member[cur]) cur = s.tokens[cur - 1].head;
        parent[i] = cur;
    }
    std::vector<std::vector<int>> children(n + 1);
    std::vector<int> roots;
    for (int i = 1; i <= n; ++i) {
        if (!member[i]) continue;
        if (parent[i] == 0)
            roots.push_back(i);
        else
            children[parent[i]].push_back(i);
    }
    // heights via post-order (token indices are topologically safe to iterate
    // repeatedly; depth-first without recursion)
    std::vector<int> height(n + 1, 0);
    std::vector<int> heights;
    for (int r : roots) {
        std::vector<std::pair<int, bool>> stack{{r, false}};
        while (!stack.empty()) {
            auto [node, processed] = stack.back();
            stack.pop_back();
            if (processed) {
                int h = 1;
                for (int c : children[node]) h = std::max(h, height[c] + 1);
                height[node] = h;
            } else {
                stack.push_back({node, true});
                for (int c : children[node]) stack.push_back({c, false});
            }
        }
        heights.push_back(height[r]);
    }
    return heights;
}

} // namespace

double chunked_ttr(std::span<const std::string> stream, std::size_t n) {
    auto distinct_ratio = [](std::span<const std::string> chunk, std::size_t denom) {
        std::unordered_set<std::string_view> types(chunk.begin(), chunk.end());
        return static_cast<double>(types.size()) / static_cast<double>(denom);
    };
    if (stream.size() < n) return distinct_ratio(stream, stream.size());
    std::size_t full_chunks = stream.size() / n;
    double sum = 0.0;
    for (std::size_t c = 0; c < full_chunks; ++c)
        sum += distinct_ratio(stream.subspan(c * n, n), n);
    return sum / static_cast<double>(full_chunks);
}

void raw_text_features(const Document& doc, FeatureVector& out) {
    auto tokens = all_tokens(doc);
    double n_tokens = static_cast<double>(tokens.size());
    double n_sentences = static_cast<double>(doc.sentences.size());
    out.set(fidx("n_sentences"), n_sentences);
    out.set(fidx("n_tokens"), n_tokens);
    out.set(fidx("tokens_per_sent"), n_tokens / n_sentences);

    std::size_t words = 0, chars = 0;
    for (const Token* t : tokens) {
        if (is_punct(*t)) continue;
        ++words;
        chars += codepoint_count(t->form);
    }
    std::size_t i = fidx("char_per_tok");
    if (words == 0)
        out.mask(i);
    else
        out.set(i, static_cast<double>(chars) / static_cast<double>(words));
}

void ttr_features(const Document& doc, FeatureVector& out) {
    std::vector<std::string> forms, lemmas;
    for (const Sentence& s : doc.sentences) {
        for (const Token& t : s.tokens) {
            if (is_punct(t)) continue;
            forms.push_back(t.form);
            lemmas.push_back(t.lemma);
        }
    }
    const std::pair<const char*, std::size_t> specs[] = {{"ttr_form_chunks_100", 100},
                                                         {"ttr_form_chunks_200", 200},
                                                         {"ttr_lemma_chunks_100", 100},
                                                         {"ttr_lemma_chunks_200", 200}};
    for (auto& [name, n] : specs) {
        bool lemma = std::string_view(name).find("lemma") != std::string_view::npos;
        const auto& stream = lemma ? lemmas : forms;
        std::size_t i = fidx(name);
        if (stream.empty())
            out.mask(i);
        else
            out.set(i, chunked_ttr(stream, n));
    }
}

void morphosyntax_features(const Document& doc, FeatureVector& out) {
    auto tokens = all_tokens(doc);
    double n_tokens = static_cast<double>(tokens.size());

    std::map<std::string, std::size_t> upos_counts, xpos_counts;
    std::map<std::string, std::size_t> verb_xpos, aux_xpos, verb_form, aux_form;
    std::map<std::string, std::size_t> verb_tense, aux_tense, verb_np;
    std::size_t xpos_total = 0, lexical = 0;
    std::size_t verb_xpos_total = 0, aux_xpos_total = 0;
    std::size_t verb_form_total = 0, aux_form_total = 0;
    std::size_t verb_tense_total = 0, aux_tense_total = 0, verb_np_total = 0;

    static const char* verb_xpos_keys[] = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"};
    static const char* aux_xpos_keys[] = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "MD"};
    static const char* form_keys[] = {"Fin", "Inf", "Ger", "Part"};
    static const char* tense_keys[] = {"Pres", "Past"};
    static const char* num_pers_keys[] = {"Sing+1", "Sing+2", "Sing+3", "Plur+1", "Plur+2",
                                          "Plur+3", "Sing+", "Plur+", "+1", "+2", "+3"};
    auto in_keys = [](std::string_view v, std::span<const char* const> keys) {
        return std::any_of(keys.begin(), keys.end(), [&](const char* k) { return v == k; });
    };

    for (const Token* t : tokens) {
        upos_counts[to_string(t->upos)]++;
        if (is_lexical(*t)) ++lexical;
        if (!t->xpos.empty()) {
            xpos_counts[xpos_suffix(t->xpos)]++;
            ++xpos_total;
        }
        bool is_verb = t->upos == Upos::VERB;
        bool is_aux = t->upos == Upos::AUX;
        if (!is_verb && !is_aux) continue;

        if (is_verb && in_keys(t->xpos, verb_xpos_keys)) {
            verb_xpos[t->xpos]++;
            ++verb_xpos_total;
        }
        if (is_aux && in_keys(t->xpos, aux_xpos_keys)) {
            aux_xpos[t->xpos]++;
            ++aux_xpos_total;
        }
        std::string_view form = feat_of(*t, "VerbForm");
        if (in_keys(form, form_keys)) {
            if (is_verb) {
                verb_form[std::string(form)]++;
                ++verb_form_total;
            } else {
                aux_form[std::string(form)]++;
                ++aux_form_total;
            }
        }
        std::string_view tense = feat_of(*t, "Tense");
        if (in_keys(tense, tense_keys)) {
            if (is_verb) {
                verb_tense[std::string(tense)]++;
                ++verb_tense_total;
            } else {
                aux_tense[std::string(tense)]++;
                ++aux_tense_total;
            }
        }
        if (is_verb) {
            std::string_view number = feat_of(*t, "Number");
            std::string_view person = feat_of(*t, "Person");
            if (!number.empty() || !person.empty()) {
                std::string key = std::string(number) + "+" + std::string(person);
                if (in_keys(key, num_pers_keys)) {
                    verb_np[key]++;
                    ++verb_np_total;
                }
            }
        }
    }

    static const char* upos_keys[] = {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ",
                                      "NOUN", "NUM", "PART", "PRON", "PROPN", "PUNCT",
                                      "SCONJ", "SYM", "VERB", "X"};
    fill_distribution(out, "upos_dist_", upos_counts, tokens.size(), upos_keys);

    static const char* xpos_keys[] = {
        "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNP",
        "NNPS", "NNS", "PDT", "POS", "PRP", "PRP_POSS", "RB", "RBR", "RBS", "RP", "SYM",
        "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP_POSS", "WRB",
        "ADD", "AFX", "GW", "HYPH", "NFP", "XX", "PERIOD", "COMMA", "COLON", "CLOSEQUOTE",
        "OPENQUOTE", "LRB", "RRB", "CURRENCY", "OTHER"};
    fill_distribution(out, "xpos_dist_", xpos_counts, xpos_total, xpos_keys);

    out.set(fidx("lexical_density"), static_cast<double>(lexical) / n_tokens);

    fill_distribution(out, "verbs_xpos_dist_", verb_xpos, verb_xpos_total, verb_xpos_keys);
    fill_distribution(out, "aux_xpos_dist_", aux_xpos, aux_xpos_total, aux_xpos_keys);
    fill_distribution(out, "verbs_form_dist_", verb_form, verb_form_total, form_keys);
    fill_distribution(out, "aux_form_dist_", aux_form, aux_form_total, form_keys);
    fill_distribution(out, "verbs_tense_dist_", verb_tense, verb_tense_total, tense_keys);
    fill_distribution(out, "aux_tense_dist_", aux_tense, aux_tense_total, tense_keys);
    fill_distribution(out, "verbs_num_pers_dist_", verb_np, verb_np_total, num_pers_keys);
}

void syntax_features(const Document& doc, FeatureVector& out) {
    double n_tokens = 0, n_sentences = static_cast<double>(doc.sentences.size());
    for (const Sentence& s : doc.sentences) n_tokens += static_cast<double>(s.tokens.size());

    // subordinate-clause attachment relations
    static const std::set<std::string_view> sub_rels = {"advcl", "acl", "ccomp", "xcomp", "csubj"};
    static const std::set<std::string_view> core_rels = {"nsubj", "obj", "iobj",
                                                         "ccomp", "xcomp", "csubj"};

    std::size_t verbal_heads = 0, verbal_roots = 0;
    std::vector<std::size_t> verb_core_counts;   // per VERB token with >= 1 dependent
    double depth_sum = 0;
    double links_sum = 0;
    std::size_t links_n = 0;
    double max_links_sum = 0;
    std::size_t max_links_sents = 0;
    std::size_t main_clauses = 0, sub_clauses = 0;
    std::size_t subj_total = 0, subj_pre_n = 0;
    std::size_t obj_total = 0, obj_pre_n = 0;
    std::size_t subord_total = 0, subord_pre_n = 0;
    std::map<std::string, std::size_t> dep_counts;
    std::vector<int> prep_heights, subord_heights;

    static const std::set<std::string_view> known_rels = {
        "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf",
        "compound", "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated",
        "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark", "nmod", "nsubj",
        "nummod", "obj", "obl", "orphan", "parataxis", "punct", "reparandum", "root",
        "vocative", "xcomp"};

    for (const Sentence& s : doc.sentences) {
        int n = static_cast<int>(s.tokens.size());
        std::vector<std::size_t> dependent_count(static_cast<std::size_t>(n) + 1, 0);
        std::vector<std::size_t> core_count(static_cast<std::size_t>(n) + 1, 0);
        std::vector<bool> case_adp_dep(static_cast<std::size_t>(n) + 1, false);

        for (const Token& t : s.tokens) {
            std::string_view rel = base_deprel(t.deprel);
            dep_counts[known_rels.count(rel) ? std::string(rel) : std::string("OTHER")]++;
            if (t.head != 0) {
                dependent_count[static_cast<std::size_t>(t.head)]++;
                if (core_rels.count(rel)) core_count[static_cast<std::size_t>(t.head)]++;
                if (rel == "case" && t.upos == Upos::ADP)
                    case_adp_dep[static_cast<std::size_t>(t.head)] = true;
            }
            if (rel == "nsubj" || rel == "csubj") {
                ++subj_total;
                if (t.index < t.head) ++subj_pre_n;
            }
            if (rel == "obj" || rel == "iobj") {
                ++obj_total;
                if (t.index < t.head) ++obj_pre_n;
            }
            if (sub_rels.count(rel)) {
                ++sub_clauses;
                ++subord_total;
                if (t.index < t.head) ++subord_pre_n;
            }
        }

        // clause heads: the root, verbal conj conjuncts and parataxis
        ++main_clauses;
        for (const Token& t : s.tokens) {
            std::string_view rel = base_deprel(t.deprel);
            if (rel == "parataxis" && t.head != 0) ++main_clauses;
            if (rel == "conj" && t.head != 0 && (t.upos == Upos::VERB || t.upos == Upos::AUX))
                ++main_clauses;
        }

        for (const Token& t : s.tokens) {
            bool verbal = t.upos == Upos::VERB || t.upos == Upos::AUX;
            if (verbal && dependent_count[static_cast<std::size_t>(t.index)] > 0) ++verbal_heads;
            if (t.head == 0 && t.upos == Upos::VERB) ++verbal_roots;
            if (t.upos == Upos::VERB && dependent_count[static_cast<std::size_t>(t.index)] > 0)
                verb_core_counts.push_back(core_count[static_cast<std::size_t>(t.index)]);
        }

        // depths (root token depth 0)
        int max_depth = 0;
        for (const Token& t : s.tokens) {
            int depth = 0;
            int cur = t.head;
            while (cur != 0) {
                ++depth;
                cur = s.tokens[static_cast<std::size_t>(cur - 1)].head;
            }
            max_depth = std::max(max_depth, depth);
        }
        depth_sum += max_depth;

        int sent_max_link = 0;
        bool has_link = false;
        for (const Token& t : s.tokens) {
            if (t.head == 0) continue;
            int len = std::abs(t.head - t.index);
            links_sum += len;
            ++links_n;
            sent_max_link = std::max(sent_max_link, len);
            has_link = true;
        }
        if (has_link) {
            max_links_sum += sent_max_link;
            ++max_links_sents;
        }

        std::vector<bool> prep_member(static_cast<std::size_t>(n) + 1, false);
        std::vector<bool> subord_member(static_cast<std::size_t>(n) + 1, false);
        for (const Token& t : s.tokens) {
            prep_member[static_cast<std::size_t>(t.index)] =
                case_adp_dep[static_cast<std::size_t>(t.index)];
            subord_member[static_cast<std::size_t>(t.index)] = sub_rels.count(base_deprel(t.deprel)) > 0;
        }
        for (int h : nesting_chain_heights(s, prep_member)) prep_heights.push_back(h);
        for (int h : nesting_chain_heights(s, subord_member)) subord_heights.push_back(h);
    }

    out.set(fidx("verbal_head_per_sent"), static_cast<double>(verbal_heads) / n_sentences);
    out.set(fidx("verbal_root_perc"), static_cast<double>(verbal_roots) / n_sentences);

    std::size_t i_avg_edges = fidx("avg_verb_edges");
    if (verb_core_counts.empty()) {
        out.mask(i_avg_edges);
    } else {
        double sum = 0;
        for (std::size_t c : verb_core_counts) sum += static_cast<double>(c);
        out.set(i_avg_edges, sum / static_cast<double>(verb_core_counts.size()));
    }
    for (int k = 0; k <= 5; ++k) {
        std::size_t i = fidx("verbal_arity_" + std::to_string(k));
        if (verb_core_counts.empty()) {
            out.mask(i);
        } else {
            std::size_t c = static_cast<std::size_t>(std::count_if(
                verb_core_counts.begin(), verb_core_counts.end(),
                [&](std::size_t v) { return static_cast<int>(std::min<std::size_t>(v, 5)) == k; }));
            out.set(i, static_cast<double>(c) / static_cast<double>(verb_core_counts.size()));
        }
    }

    out.set(fidx("parse_depth"), depth_sum / n_sentences);
    if (links_n == 0) {
        out.mask(fidx("avg_links_len"));
        out.mask(fidx("max_links_len"));
    } else {
        out.set(fidx("avg_links_len"), links_sum / static_cast<double>(links_n));
        out.set(fidx("max_links_len"), max_links_sum / static_cast<double>(max_links_sents));
    }

    out.set(fidx("n_prepositional_chains"), static_cast<double>(prep_heights.size()));
    auto fill_chain_features = [&](const std::vector<int>& heights, const char* avg_name,
                                   std::string_view dist_prefix) {
        std::size_t i_avg = fidx(avg_name);
        if (heights.empty()) {
            out.mask(i_avg);
            for (int k = 1; k <= 4; ++k) out.mask(fidx(std::string(dist_prefix) + std::to_string(k)));
            return;
        }
        double sum = 0;
        for (int h : heights) sum += h;
        out.set(i_avg, sum / static_cast<double>(heights.size()));
        for (int k = 1; k <= 4; ++k) {
            std::size_t c = static_cast<std::size_t>(
                std::count_if(heights.begin(), heights.end(),
                              [&](int h) { return std::min(h, 4) == k; }));
            out.set(fidx(std::string(dist_prefix) + std::to_string(k)),
                    static_cast<double>(c) / static_cast<double>(heights.size()));
        }
    };
    fill_chain_features(prep_heights, "avg_prep_chain_len", "prep_dist_");
    fill_chain_features(subord_heights, "avg_subord_chain_len", "subordinate_dist_");

    out.set(fidx("avg_token_per_clause"),
            n_tokens / static_cast<double>(main_clauses + sub_clauses));

    auto fill_order_pair = [&](std::size_t total, std::size_t pre, const char* pre_name,
                               const char* post_name) {
        std::size_t i_pre = fidx(pre_name), i_post = fidx(post_name);
        if (total == 0) {
            out.mask(i_pre);
            out.mask(i_post);
        } else {
            double p = static_cast<double>(pre) / static_cast<double>(total);
            out.set(i_pre, p);
            out.set(i_post, static_cast<double>(total - pre) / static_cast<double>(total));
        }
    };
    fill_order_pair(subj_total, subj_pre_n, "subj_pre", "subj_post");
    fill_order_pair(obj_total, obj_pre_n, "obj_pre", "obj_post");
    fill_order_pair(subord_total, subord_pre_n, "subordinate_pre", "subordinate_post");

    static const char* dep_keys[] = {
        "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf",
        "compound", "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated",
        "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark", "nmod", "nsubj",
        "nummod", "obj", "obl", "orphan", "parataxis", "punct", "reparandum", "root",
        "vocative", "xcomp", "OTHER"};
    fill_distribution(out, "dep_dist_", dep_counts, static_cast<std::size_t>(n_tokens), dep_keys);

    double clause_total = static_cast<double>(main_clauses + sub_clauses);
    out.set(fidx("principal_proposition_dist"), static_cast<double>(main_clauses) / clause_total);
    out.set(fidx("subordinate_proposition_dist"), static_cast<double>(sub_clauses) / clause_total);
}

FeatureVector profile_document(const Document& doc) {
    FeatureVector out(reg().size());
    raw_text_features(doc, out);
    ttr_features(doc, out);
    morphosyntax_features(doc, out);
    syntax_features(doc, out);
    return out;
}

std::size_t ProfiledCorpus::index_of(std::string_view doc_id) const {
    for (std::size_t i = 0; i < doc_ids.size(); ++i)
        if (doc_ids[i] == doc_id) return i;
    throw SchemaError("doc_id '" + std::string(doc_id) + "' not in profiled corpus");
}

const FeatureVector& ProfiledCorpus::row(std::string_view doc_id) const {
    return rows[index_of(doc_id)];
}

ProfiledCorpus profile_corpus(const Corpus& corpus) {
    ProfiledCorpus pc;
    for (const Document& d : corpus.documents) {
        pc.doc_ids.push_back(d.doc_id);
        pc.prompt_ids.push_back(d.prompt_id);
        pc.labels.push_back(d.source_label);
        pc.rows.push_back(profile_document(d));
    }
    return pc;
}

std::string profiled_to_csv(const ProfiledCorpus& pc) {
    std::string out = "doc_id,prompt_id,source_label";
    for (const std::string& name : reg().names()) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t r = 0; r < pc.rows.size(); ++r) {
        out += pc.doc_ids[r];
        out += ',';
        out += pc.prompt_ids[r];
        out += ',';
        out += to_string(pc.labels[r]);
        for (std::size_t i = 0; i < reg().size(); ++i) {
            out += ',';
            if (pc.rows[r].defined(i)) out += fmt_double(pc.rows[r].value(i));
        }
        out += '\n';
    }
    return out;
}

ProfiledCorpus profiled_from_csv(std::string_view csv) {
    std::vector<std::string> lines = split(csv, '\n');
    if (lines.empty() || trim(lines[0]).empty())
        throw SchemaError("profiled CSV: missing header");
    std::vector<std::string> header = split(trim(lines[0]), ',');
    if (header.size() != reg().size() + 3 || header[0] != "doc_id" || header[1] != "prompt_id" ||
        header[2] != "source_label")
        throw SchemaError("profiled CSV: unexpected header shape");
    std::vector<std::size_t> col_to_feature(header.size());
    for (std::size_t c = 3; c < header.size(); ++c) {
        auto idx = reg().resolve(header[c]);
        if (!idx) throw SchemaError("profiled CSV: unknown feature column '" + header[c] + "'");
        col_to_feature[c] = *idx;
    }
    ProfiledCorpus pc;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        std::vector<std::string> cells = split(lines[ln], ',');
        if (cells.size() != header.size())
            throw ParseError("profiled CSV line " + std::to_string(ln + 1) + ": expected " +
                             std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        pc.doc_ids.push_back(cells[0]);
        pc.prompt_ids.push_back(cells[1]);
        auto label = source_label_from_string(cells[2]);
        if (!label)
            throw ParseError("profiled CSV line " + std::to_string(ln + 1) + ": bad source_label '" +
                             cells[2] + "'");
        pc.labels.push_back(*label);
        FeatureVector fv(reg().size());
        for (std::size_t c = 3; c < cells.size(); ++c) {
            if (cells[c].empty()) continue;
            fv.set(col_to_feature[c], parse_double(cells[c], "profiled CSV line " + std::to_string(ln + 1)));
        }
        pc.rows.push_back(std::move(fv));
    }
    return pc;
}

std::string profiled_to_jsonl(const ProfiledCorpus& pc) {
    std::string out;
    for (std::size_t r = 0; r < pc.rows.size(); ++r) {
        nlohmann::json j;
        j["doc_id"] = pc.doc_ids[r];
        j["prompt_id"] = pc.prompt_ids[r];
        j["source_label"] = to_string(pc.labels[r]);
        nlohmann::json values = nlohmann::json::object();
        for (std::size_t i = 0; i < reg().size(); ++i)
            if (pc.rows[r].defined(i)) values[reg().name(i)] = pc.rows[r].value(i);
        j["features"] = std::move(values);
        out += j.dump();
        out += '\n';
    }
    return out;
}

ProfiledCorpus profiled_from_jsonl(std::string_view jsonl) {
    ProfiledCorpus pc;
    std::size_t ln = 0;
    for (const std::string& raw : split(jsonl, '\n')) {
        ++ln;
        if (trim(raw).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded())
            throw ParseError("profiled JSONL line " + std::to_string(ln) + ": invalid JSON");
        pc.doc_ids.push_back(j.at("doc_id").get<std::string>());
        pc.prompt_ids.push_back(j.at("prompt_id").get<std::string>());
        auto label = source_label_from_string(j.at("source_label").get<std::string>());
        if (!label) throw ParseError("profiled JSONL line " + std::to_string(ln) + ": bad source_label");
        pc.labels.push_back(*label);
        FeatureVector fv(reg().size());
        for (const auto& [name, value] : j.at("features").items()) {
            auto idx = reg().resolve(name);
            if (!idx) throw SchemaError("profiled JSONL: unknown feature '" + name + "'");
            fv.set(*idx, value.get<double>());
        }
        pc.rows.push_back(std::move(fv));
    }
    return pc;
}

ProfiledCorpus slice_by_label(const ProfiledCorpus& pc, SourceLabel label) {
    ProfiledCorpus out;
    for (std::size_t r = 0; r < pc.rows.size(); ++r) {
        if (pc.labels[r] != label) continue;
        out.doc_ids.push_back(pc.doc_ids[r]);
        out.prompt_ids.push_back(pc.prompt_ids[r]);
        out.labels.push_back(pc.labels[r]);
        out.rows.push_back(pc.rows[r]);
    }
    return out;
}

std::vector<double> feature_column(const ProfiledCorpus& pc, std::size_t feature) {
    std::vector<double> out;
    for (const FeatureVector& row : pc.rows)
        if (row.defined(feature)) out.push_back(row.value(feature));
    return out;
}

} // namespace mgtkit
