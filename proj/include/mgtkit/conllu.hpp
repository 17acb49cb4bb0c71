#ifndef MGTKIT_CONLLU_HPP
#define MGTKIT_CONLLU_HPP

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgtkit {

// The 17 UD universal POS tags (X doubles as the placeholder).
enum class Upos {
    ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
    PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X
};

constexpr int kUposCount = 17;

const char* to_string(Upos u);
std::optional<Upos> upos_from_string(std::string_view s);

enum class SourceLabel { human, machine };
enum class Strategy { base, dpo, dpo_ling };

const char* to_string(SourceLabel l);
const char* to_string(Strategy s);
std::optional<SourceLabel> source_label_from_string(std::string_view s);
std::optional<Strategy> strategy_from_string(std::string_view s);

// One syntactic word. Multiword surface ranges live on the Sentence, not here.
struct Token {
    int index = 0;                                // 1-based within sentence
    std::string form;
    std::string lemma;
    Upos upos = Upos::X;
    std::string xpos;                             // empty when '_'
    std::map<std::string, std::string> feats;     // morph key -> value
    int head = 0;                                 // 0 = sentence root
    std::string deprel;                           // kept verbatim, subtype included

    bool operator==(const Token&) const = default;
};

// Deprel with any ':' subtype removed (acl:relcl -> acl).
std::string_view base_deprel(std::string_view deprel);

struct MultiwordRange {
    int start = 0;
    int end = 0;
    std::string form;

    bool operator==(const MultiwordRange&) const = default;
};

struct Sentence {
    std::vector<Token> tokens;
    std::vector<MultiwordRange> multiword;
    std::string sent_id;   // from '# sent_id =', empty if absent
    std::string text;      // from '# text =', empty if absent

    // Index (1-based) of the token with head 0.
    int root_index() const;
    // Dependents of the 1-based token index, in token order.
    std::vector<int> dependents(int index) const;

    bool operator==(const Sentence&) const = default;
};

struct Lineage {
    std::string generator;
    int iteration = 0;
    Strategy strategy = Strategy::base;

    bool operator==(const Lineage&) const = default;
};

struct Document {
    std::string doc_id;
    std::string prompt_id;     // title key linking HWT <-> MGT
    std::string title;         // prompt text; defaults to prompt_id
    SourceLabel source_label = SourceLabel::human;
    Lineage lineage;
    std::string raw_text;
    std::vector<Sentence> sentences;

    bool operator==(const Document&) const = default;
};

struct PromptIndexEntry {
    std::optional<std::string> human_doc_id;
    std::vector<std::string> machine_doc_ids;   // sorted

    bool operator==(const PromptIndexEntry&) const = default;
};

struct Corpus {
    std::vector<Document> documents;
    std::map<std::string, PromptIndexEntry> index;   // prompt_id -> entry

    // Exactly one human and at least one machine document per prompt.
    bool is_parallel() const;
    const Document* find(std::string_view doc_id) const;

    bool operator==(const Corpus&) const = default;
};

// One line of the metadata sidecar (JSON-lines, one object per document).
struct SidecarRecord {
    std::string doc_id;
    std::string prompt_id;
    std::string title;    // optional in the file; defaults to prompt_id
    SourceLabel source_label = SourceLabel::human;
    Lineage lineage;
};

using Sidecar = std::map<std::string, SidecarRecord>;

Sidecar parse_sidecar(std::string_view jsonl);
std::string sidecar_to_jsonl(const Corpus& corpus);

// Parse a CoNLL-U stream (10 tab-separated columns, '#' comments, blank line
// between sentences, '# newdoc id = <doc_id>' document boundaries). The
// sidecar supplies prompt/label/lineage per doc_id. Multiword range lines are
// recorded on the sentence; empty nodes (decimal ids) are rejected.
Corpus parse_conllu(std::string_view content, const Sidecar& sidecar);

std::string to_conllu(const Corpus& corpus);

struct DocPair {
    const Document* human = nullptr;
    const Document* machine = nullptr;
};

// One pair per (prompt_id, machine doc), sorted by prompt_id then machine
// doc_id. Throws PairingError listing prompts whose machine documents have no
// human counterpart.
std::vector<DocPair> pair_corpus(const Corpus& corpus);

} // namespace mgtkit

#endif
