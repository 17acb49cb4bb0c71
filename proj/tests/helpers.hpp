// Shared fixture builders for the test suites.
#ifndef MGTKIT_TESTS_HELPERS_HPP
#define MGTKIT_TESTS_HELPERS_HPP

#include "mgtkit/conllu.hpp"
#include "mgtkit/profiling.hpp"
#include "mgtkit/svm.hpp"
#include "mgtkit/util.hpp"

#include <string>
#include <vector>

namespace testutil {

using namespace mgtkit;

inline std::string data_path(const std::string& name) {
    return std::string(MGTKIT_TEST_DATA_DIR) + "/" + name;
}

inline Corpus load_handmade() {
    return parse_conllu(read_file(data_path("handmade.conllu")),
                        parse_sidecar(read_file(data_path("handmade_meta.jsonl"))));
}

// ---- synthetic document generator -----------------------------------------
//
// Builds small but structurally valid documents. The style knobs give the
// machine population a detectably different feature profile (more adjectives,
// longer words, longer sentences).

struct SynthStyle {
    double adjective_rate = 0.2;    // chance of an amod before each noun
    int min_sentences = 2;
    int max_sentences = 4;
    int min_clauses = 1;            // extra advcl clauses per sentence
    int max_clauses = 2;
    int noun_pool = 40;             // vocabulary size; smaller pool = lower TTR
    int word_stretch = 0;           // extra characters appended to word forms
};

inline SynthStyle human_style() { return SynthStyle{}; }

inline SynthStyle machine_style() {
    SynthStyle s;
    s.adjective_rate = 0.75;
    s.min_sentences = 3;
    s.max_sentences = 5;
    s.min_clauses = 2;
    s.max_clauses = 3;
    s.noun_pool = 12;
    s.word_stretch = 3;
    return s;
}

inline Document synth_document(const std::string& doc_id, const std::string& prompt_id,
                               SourceLabel label, const Lineage& lineage, DetRng& rng,
                               const SynthStyle& style) {
    static const char* nouns[] = {"council", "report", "minister", "city", "plan", "budget",
                                  "review", "policy", "market", "school", "survey", "deal",
                                  "union", "committee", "region", "project", "figure", "party",
                                  "agency", "audit", "debate", "reform", "sector", "firm",
                                  "board", "mayor", "clinic", "bridge", "route", "tax",
                                  "grant", "study", "panel", "forum", "pledge", "quota",
                                  "lease", "tender", "permit", "charter"};
    static const char* verbs[] = {"approved", "rejected", "announced", "reviewed", "defended",
                                  "proposed", "launched", "delayed", "examined", "confirmed"};
    static const char* adjectives[] = {"new", "bold", "major", "key", "local", "public",
                                       "strong", "broad", "joint", "formal"};

    auto pick = [&](auto& pool, std::size_t limit) {
        return std::string(pool[rng.next_below(std::min(limit, std::size(pool)))]);
    };
    auto stretch = [&](std::string w) {
        for (int i = 0; i < style.word_stretch; ++i) w += 'x';
        return w;
    };

    Document doc;
    doc.doc_id = doc_id;
    doc.prompt_id = prompt_id;
    doc.title = "Title " + prompt_id;
    doc.source_label = label;
    doc.lineage = lineage;

    int n_sents = style.min_sentences +
                  static_cast<int>(rng.next_below(
                      static_cast<std::uint64_t>(style.max_sentences - style.min_sentences + 1)));
    for (int si = 0; si < n_sents; ++si) {
        Sentence sent;
        int idx = 0;
        auto add = [&](std::string form, std::string lemma, Upos upos, std::string xpos,
                       std::map<std::string, std::string> feats, int head, std::string deprel) {
            Token t;
            t.index = ++idx;
            t.form = std::move(form);
            t.lemma = std::move(lemma);
            t.upos = upos;
            t.xpos = std::move(xpos);
            t.feats = std::move(feats);
            t.head = head;
            t.deprel = std::move(deprel);
            sent.tokens.push_back(std::move(t));
            return idx;
        };
        // noun phrase returning the index of its head noun; heads fixed later
        auto noun_phrase = [&](int head, const std::string& rel) {
            int det = add("the", "the", Upos::DET, "DT",
                          {{"Definite", "Def"}, {"PronType", "Art"}}, 0, "det");
            int amod = 0;
            if (rng.next_double() < style.adjective_rate) {
                std::string a = pick(adjectives, 10);
                amod = add(a, a, Upos::ADJ, "JJ", {{"Degree", "Pos"}}, 0, "amod");
            }
            std::string n = stretch(pick(nouns, static_cast<std::size_t>(style.noun_pool)));
            int noun = add(n, n, Upos::NOUN, "NN", {{"Number", "Sing"}}, head, rel);
            sent.tokens[static_cast<std::size_t>(det - 1)].head = noun;
            if (amod) sent.tokens[static_cast<std::size_t>(amod - 1)].head = noun;
            return noun;
        };

        // main clause: NP verb NP
        int subj = noun_phrase(0, "nsubj");
        std::string v = pick(verbs, 10);
        int verb = add(v, v, Upos::VERB, "VBD",
                       {{"Mood", "Ind"}, {"Tense", "Past"}, {"VerbForm", "Fin"}}, 0, "root");
        sent.tokens[static_cast<std::size_t>(subj - 1)].head = verb;
        noun_phrase(verb, "obj");

        int n_clauses = style.min_clauses +
                        static_cast<int>(rng.next_below(
                            static_cast<std::uint64_t>(style.max_clauses - style.min_clauses + 1)));
        for (int ci = 0; ci < n_clauses; ++ci) {
            // "because NP verbed NP" attached to the main verb
            add("because", "because", Upos::SCONJ, "IN", {}, 0, "mark");
            int mark = idx;
            int csubj = noun_phrase(0, "nsubj");
            std::string cv = pick(verbs, 10);
            int cverb = add(cv, cv, Upos::VERB, "VBD",
                            {{"Mood", "Ind"}, {"Tense", "Past"}, {"VerbForm", "Fin"}}, verb, "advcl");
            sent.tokens[static_cast<std::size_t>(mark - 1)].head = cverb;
            sent.tokens[static_cast<std::size_t>(csubj - 1)].head = cverb;
            noun_phrase(cverb, "obj");
        }
        add(".", ".", Upos::PUNCT, ".", {}, verb, "punct");
        doc.sentences.push_back(std::move(sent));
    }
    std::vector<std::string> parts;
    for (const Sentence& s : doc.sentences) {
        std::string text;
        for (const Token& t : s.tokens) {
            if (!text.empty() && t.upos != Upos::PUNCT) text += ' ';
            text += t.form;
        }
        parts.push_back(text);
    }
    doc.raw_text = join(parts, " ");
    return doc;
}

inline Corpus synth_corpus(int n_prompts, const std::string& generator, int iteration,
                           std::uint64_t seed) {
    DetRng rng(seed);
    Corpus corpus;
    for (int i = 0; i < n_prompts; ++i) {
        std::string prompt = "p" + std::to_string(100 + i);
        corpus.documents.push_back(synth_document("h-" + prompt, prompt, SourceLabel::human,
                                                  Lineage{"human", 0, Strategy::base}, rng,
                                                  human_style()));
        corpus.documents.push_back(synth_document(
            "m" + std::to_string(iteration) + "-" + prompt, prompt, SourceLabel::machine,
            Lineage{generator, iteration, Strategy::base}, rng, machine_style()));
    }
    for (const Document& d : corpus.documents) {
        PromptIndexEntry& e = corpus.index[d.prompt_id];
        if (d.source_label == SourceLabel::human)
            e.human_doc_id = d.doc_id;
        else
            e.machine_doc_ids.push_back(d.doc_id);
    }
    return corpus;
}

// ---- blob fixture for the detector ----------------------------------------

// Two Gaussian blobs over `n_features` features; `shifted` features of the
// machine class are displaced by `shift` standard deviations.
inline ProfiledCorpus blob_corpus(std::size_t n_per_class, std::size_t n_features,
                                  const std::vector<std::size_t>& shifted, double shift,
                                  std::uint64_t seed) {
    const FeatureRegistry& reg = FeatureRegistry::instance();
    DetRng rng(seed);
    ProfiledCorpus pc;
    for (std::size_t cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            FeatureVector fv(reg.size());
            for (std::size_t f = 0; f < n_features; ++f) {
                double v = rng.next_gaussian();
                if (cls == 1)
                    for (std::size_t s : shifted)
                        if (s == f) v += shift;
                fv.set(f, v);
            }
            std::string doc_id = (cls == 0 ? "h" : "m") + std::to_string(i);
            pc.doc_ids.push_back(doc_id);
            pc.prompt_ids.push_back("p" + std::to_string(i));
            pc.labels.push_back(cls == 0 ? SourceLabel::human : SourceLabel::machine);
            pc.rows.push_back(std::move(fv));
        }
    }
    return pc;
}

} // namespace testutil

#endif
