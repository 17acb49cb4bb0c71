#include "mgtkit/features.hpp"

#include <algorithm>

namespace mgtkit {

namespace {

const char* kUposTags[] = {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
                           "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

// Penn Treebank tags as used in UD English treebanks, with non-identifier
// characters mapped to mnemonic suffixes (PRP$ -> PRP_POSS, ',' -> COMMA).
struct XposEntry {
    const char* tag;
    const char* suffix;
};

const XposEntry kXposEntries[] = {
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
    {"``", "OPENQUOTE"}, {"-LRB-", "LRB"}, {"-RRB-", "RRB"}, {"$", "CURRENCY"},
};

// UD v2 base dependency relations.
const char* kDepRelations[] = {
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp",
    "clf", "compound", "conj", "cop", "csubj", "dep", "det", "discourse",
    "dislocated", "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark",
    "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis", "punct",
    "reparandum", "root", "vocative", "xcomp"};

const char* kVerbXpos[] = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"};
const char* kAuxXpos[] = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "MD"};
const char* kVerbForms[] = {"Fin", "Inf", "Ger", "Part"};
const char* kTenses[] = {"Pres", "Past"};
const char* kNumPers[] = {"Sing+1", "Sing+2", "Sing+3", "Plur+1", "Plur+2", "Plur+3",
                          "Sing+", "Plur+", "+1", "+2", "+3"};

} // namespace

const FeatureRegistry& FeatureRegistry::instance() {
    static FeatureRegistry registry;
    return registry;
}

FeatureRegistry::FeatureRegistry() {
    auto add = [&](std::string name) {
        by_name_.emplace(name, names_.size());
        names_.push_back(std::move(name));
        return names_.size() - 1;
    };
    auto add_family = [&](std::string_view prefix, auto&& suffixes) {
        std::vector<std::size_t> family;
        for (const char* s : suffixes) family.push_back(add(std::string(prefix) + s));
        families_.push_back(std::move(family));
    };

    // Raw text properties
    add("n_sentences");
    add("n_tokens");
    add("tokens_per_sent");
    add("char_per_tok");

    // Vocabulary richness
    ratio_.push_back(add("ttr_form_chunks_100"));
    ratio_.push_back(add("ttr_form_chunks_200"));
    ratio_.push_back(add("ttr_lemma_chunks_100"));
    ratio_.push_back(add("ttr_lemma_chunks_200"));

    // Morphosyntax
    add_family("upos_dist_", kUposTags);
    {
        std::vector<std::size_t> family;
        for (const XposEntry& e : kXposEntries) family.push_back(add(std::string("xpos_dist_") + e.suffix));
        family.push_back(add("xpos_dist_OTHER"));
        families_.push_back(std::move(family));
    }
    ratio_.push_back(add("lexical_density"));

    // Inflectional morphology of lexical verbs and auxiliaries
    add_family("verbs_xpos_dist_", kVerbXpos);
    add_family("aux_xpos_dist_", kAuxXpos);
    add_family("verbs_form_dist_", kVerbForms);
    add_family("aux_form_dist_", kVerbForms);
    add_family("verbs_tense_dist_", kTenses);
    add_family("aux_tense_dist_", kTenses);
    add_family("verbs_num_pers_dist_", kNumPers);

    // Verbal predicate structure
    add("verbal_head_per_sent");
    ratio_.push_back(add("verbal_root_perc"));
    add("avg_verb_edges");
    {
        std::vector<std::size_t> family;
        for (int k = 0; k <= 5; ++k) family.push_back(add("verbal_arity_" + std::to_string(k)));
        families_.push_back(std::move(family));
    }

    // Parsed tree structure
    add("parse_depth");
    add("avg_links_len");
    add("max_links_len");
    add("n_prepositional_chains");
    add("avg_prep_chain_len");
    {
        std::vector<std::size_t> family;
        for (int k = 1; k <= 4; ++k) family.push_back(add("prep_dist_" + std::to_string(k)));
        families_.push_back(std::move(family));
    }
    add("avg_token_per_clause");

    // Order of elements
    ratio_.push_back(add("subj_pre"));
    ratio_.push_back(add("subj_post"));
    ratio_.push_back(add("obj_pre"));
    ratio_.push_back(add("obj_post"));

    // Syntactic relations
    {
        std::vector<std::size_t> family;
        for (const char* r : kDepRelations) family.push_back(add(std::string("dep_dist_") + r));
        family.push_back(add("dep_dist_OTHER"));
        families_.push_back(std::move(family));
    }

    // Subordination
    ratio_.push_back(add("principal_proposition_dist"));
    ratio_.push_back(add("subordinate_proposition_dist"));
    add("avg_subord_chain_len");
    {
        std::vector<std::size_t> family;
        for (int k = 1; k <= 4; ++k) family.push_back(add("subordinate_dist_" + std::to_string(k)));
        families_.push_back(std::move(family));
    }
    ratio_.push_back(add("subordinate_pre"));
    ratio_.push_back(add("subordinate_post"));

    aliases_ = {
        {"sent_length", "tokens_per_sent"},
        {"verbal_head_dist", "verbal_head_per_sent"},
        {"principal_prop_dist", "principal_proposition_dist"},
        {"subordinate_prop_dist", "subordinate_proposition_dist"},
        {"ttr_form", "ttr_form_chunks_100"},
        {"ttr_lemma", "ttr_lemma_chunks_100"},
    };
}

std::optional<std::size_t> FeatureRegistry::index_of(std::string_view canonical) const {
    auto it = by_name_.find(canonical);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> FeatureRegistry::resolve(std::string_view name) const {
    if (auto i = index_of(name)) return i;
    std::string underscored(name);
    std::replace(underscored.begin(), underscored.end(), '-', '_');
    if (auto a = aliases_.find(underscored); a != aliases_.end()) underscored = a->second;
    return index_of(underscored);
}

} // namespace mgtkit
