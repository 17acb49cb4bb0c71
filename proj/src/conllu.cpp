#include "mgtkit/conllu.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <json.hpp>

namespace mgtkit {

namespace {

const char* kUposNames[kUposCount] = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

} // namespace

const char* to_string(Upos u) { return kUposNames[static_cast<int>(u)]; }

std::optional<Upos> upos_from_string(std::string_view s) {
    for (int i = 0; i < kUposCount; ++i)
        if (s == kUposNames[i]) return static_cast<Upos>(i);
    return std::nullopt;
}

const char* to_string(SourceLabel l) {
    return l == SourceLabel::human ? "human" : "machine";
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::base: return "base";
        case Strategy::dpo: return "dpo";
        case Strategy::dpo_ling: return "dpo_ling";
    }
    return "base";
}

std::optional<SourceLabel> source_label_from_string(std::string_view s) {
    if (s == "human") return SourceLabel::human;
    if (s == "machine") return SourceLabel::machine;
    return std::nullopt;
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
    if (s == "base") return Strategy::base;
    if (s == "dpo") return Strategy::dpo;
    if (s == "dpo_ling" || s == "dpo-ling") return Strategy::dpo_ling;
    return std::nullopt;
}

std::string_view base_deprel(std::string_view deprel) {
    auto pos = deprel.find(':');
    return pos == std::string_view::npos ? deprel : deprel.substr(0, pos);
}

int Sentence::root_index() const {
    for (const Token& t : tokens)
        if (t.head == 0) return t.index;
    return 0;
}

std::vector<int> Sentence::dependents(int index) const {
    std::vector<int> out;
    for (const Token& t : tokens)
        if (t.head == index) out.push_back(t.index);
    return out;
}

bool Corpus::is_parallel() const {
    if (index.empty()) return false;
    for (const auto& [prompt, entry] : index)
        if (!entry.human_doc_id || entry.machine_doc_ids.empty()) return false;
    return true;
}

const Document* Corpus::find(std::string_view doc_id) const {
    for (const Document& d : documents)
        if (d.doc_id == doc_id) return &d;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Sidecar

Sidecar parse_sidecar(std::string_view jsonl) {
    Sidecar out;
    std::size_t line_no = 0;
    for (const std::string& raw : split(jsonl, '\n')) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw MetadataError("sidecar line " + std::to_string(line_no) + ": invalid JSON object");
        auto require = [&](const char* key) -> std::string {
            if (!j.contains(key) || !j[key].is_string())
                throw MetadataError("sidecar line " + std::to_string(line_no) +
                                    ": missing string field '" + key + "'");
            return j[key].get<std::string>();
        };
        SidecarRecord rec;
        rec.doc_id = require("doc_id");
        rec.prompt_id = require("prompt_id");
        std::string label = require("source_label");
        auto sl = source_label_from_string(label);
        if (!sl)
            throw MetadataError("sidecar line " + std::to_string(line_no) +
                                ": source_label must be 'human' or 'machine', got '" + label + "'");
        rec.source_label = *sl;
        rec.lineage.generator = require("generator");
        if (!j.contains("iteration") || !j["iteration"].is_number_integer())
            throw MetadataError("sidecar line " + std::to_string(line_no) + ": missing integer field 'iteration'");
        rec.lineage.iteration = j["iteration"].get<int>();
        if (rec.lineage.iteration < 0)
            throw MetadataError("sidecar line " + std::to_string(line_no) + ": iteration must be >= 0");
        std::string strat = require("strategy");
        auto st = strategy_from_string(strat);
        if (!st)
            throw MetadataError("sidecar line " + std::to_string(line_no) +
                                ": unknown strategy '" + strat + "'");
        rec.lineage.strategy = *st;
        rec.title = j.contains("title") && j["title"].is_string() ? j["title"].get<std::string>()
                                                                  : rec.prompt_id;
        if (out.count(rec.doc_id))
            throw MetadataError("sidecar: duplicate doc_id '" + rec.doc_id + "'");
        out.emplace(rec.doc_id, std::move(rec));
    }
    return out;
}

std::string sidecar_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const Document& d : corpus.documents) {
        nlohmann::json j;
        j["doc_id"] = d.doc_id;
        j["prompt_id"] = d.prompt_id;
        j["source_label"] = to_string(d.source_label);
        j["generator"] = d.lineage.generator;
        j["iteration"] = d.lineage.iteration;
        j["strategy"] = to_string(d.lineage.strategy);
        if (d.title != d.prompt_id) j["title"] = d.title;
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// CoNLL-U parsing

namespace {

// Punctuation forms that attach to the preceding token when reconstructing
// raw text without '# text' annotations.
bool glues_left(const std::string& form) {
    static const char* tight[] = {".", ",", ";", ":", "!", "?", ")", "]", "}",
                                  "%", "'s", "n't", "''", "’", "”"};
    for (const char* t : tight)
        if (form == t) return true;
    return false;
}

bool glues_right(const std::string& form) {
    return form == "(" || form == "[" || form == "{" || form == "“" || form == "``";
}

std::string render_sentence_text(const Sentence& s) {
    // Prefer the annotated text; otherwise join forms with standard spacing,
    // substituting multiword surface forms for their covered tokens.
    if (!s.text.empty()) return s.text;
    std::string out;
    bool suppress_space = false;
    std::size_t mw = 0;
    for (std::size_t i = 0; i < s.tokens.size();) {
        std::string form;
        if (mw < s.multiword.size() && s.multiword[mw].start == s.tokens[i].index) {
            form = s.multiword[mw].form;
            int end = s.multiword[mw].end;
            while (i < s.tokens.size() && s.tokens[i].index <= end) ++i;
            ++mw;
        } else {
            form = s.tokens[i].form;
            ++i;
        }
        if (!out.empty() && !suppress_space && !glues_left(form)) out += ' ';
        suppress_space = glues_right(form);
        out += form;
    }
    return out;
}

void validate_sentence(const Sentence& s, const std::string& doc_id, std::size_t sent_no) {
    std::string where = "document '" + doc_id + "' sentence " + std::to_string(sent_no);
    if (s.tokens.empty()) throw StructuralError(where + ": empty sentence");
    int n = static_cast<int>(s.tokens.size());
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const Token& t = s.tokens[i];
        if (t.index != i + 1)
            throw StructuralError(where + ": token ids not contiguous (expected " +
                                  std::to_string(i + 1) + ", got " + std::to_string(t.index) + ")");
        if (t.head < 0 || t.head > n)
            throw StructuralError(where + ": head " + std::to_string(t.head) +
                                  " out of range for token " + std::to_string(t.index));
        if (t.head == t.index)
            throw StructuralError(where + ": token " + std::to_string(t.index) + " heads itself");
        if (t.head == 0) ++roots;
    }
    if (roots != 1)
        throw StructuralError(where + ": expected exactly one root, found " + std::to_string(roots));
    // Every token must reach the root without revisiting a node.
    for (const Token& t : s.tokens) {
        int cur = t.index;
        int steps = 0;
        while (cur != 0) {
            cur = s.tokens[static_cast<std::size_t>(cur - 1)].head;
            if (++steps > n)
                throw StructuralError(where + ": cycle involving token " + std::to_string(t.index));
        }
    }
    for (const MultiwordRange& r : s.multiword) {
        if (r.start < 1 || r.end > n || r.start > r.end)
            throw StructuralError(where + ": multiword range " + std::to_string(r.start) + "-" +
                                  std::to_string(r.end) + " out of bounds");
    }
}

std::map<std::string, std::string> parse_feats(std::string_view feats, std::size_t line_no) {
    std::map<std::string, std::string> out;
    if (feats == "_" || feats.empty()) return out;
    for (const std::string& item : split(feats, '|')) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("line " + std::to_string(line_no) + ": malformed feats item '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

} // namespace

Corpus parse_conllu(std::string_view content, const Sidecar& sidecar) {
    Corpus corpus;
    Document* doc = nullptr;
    Sentence sent;
    std::string pending_sent_id, pending_text;
    std::size_t sent_no = 0;
    std::map<std::string, bool> seen_doc_ids;

    auto flush_sentence = [&](std::size_t line_no) {
        if (sent.tokens.empty() && sent.multiword.empty()) {
            sent = Sentence{};
            pending_sent_id.clear();
            pending_text.clear();
            return;
        }
        if (!doc)
            throw ParseError("line " + std::to_string(line_no) + ": token lines before '# newdoc id'");
        sent.sent_id = pending_sent_id;
        sent.text = pending_text;
        ++sent_no;
        validate_sentence(sent, doc->doc_id, sent_no);
        doc->sentences.push_back(std::move(sent));
        sent = Sentence{};
        pending_sent_id.clear();
        pending_text.clear();
    };

    auto finish_doc = [&]() {
        if (!doc) return;
        if (doc->sentences.empty())
            throw StructuralError("document '" + doc->doc_id + "' has no sentences");
        if (doc->raw_text.empty()) {
            std::vector<std::string> parts;
            parts.reserve(doc->sentences.size());
            for (const Sentence& s : doc->sentences) parts.push_back(render_sentence_text(s));
            doc->raw_text = join(parts, " ");
        }
    };

    std::size_t line_no = 0;
    for (const std::string& raw : split(content, '\n')) {
        ++line_no;
        std::string line = raw;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush_sentence(line_no);
            continue;
        }
        if (line[0] == '#') {
            std::string_view body = trim(std::string_view(line).substr(1));
            if (body.rfind("newdoc id =", 0) == 0) {
                flush_sentence(line_no);
                finish_doc();
                std::string doc_id(trim(body.substr(11)));
                if (doc_id.empty())
                    throw ParseError("line " + std::to_string(line_no) + ": empty newdoc id");
                if (seen_doc_ids.count(doc_id))
                    throw StructuralError("duplicate doc_id '" + doc_id + "'");
                seen_doc_ids[doc_id] = true;
                auto it = sidecar.find(doc_id);
                if (it == sidecar.end())
                    throw MetadataError("doc_id '" + doc_id + "' missing from metadata sidecar");
                corpus.documents.emplace_back();
                doc = &corpus.documents.back();
                doc->doc_id = doc_id;
                doc->prompt_id = it->second.prompt_id;
                doc->title = it->second.title;
                doc->source_label = it->second.source_label;
                doc->lineage = it->second.lineage;
                sent_no = 0;
            } else if (body.rfind("sent_id =", 0) == 0) {
                pending_sent_id = std::string(trim(body.substr(9)));
            } else if (body.rfind("text =", 0) == 0) {
                pending_text = std::string(trim(body.substr(6)));
            }
            // other comments ignored
            continue;
        }

        std::vector<std::string> cols = split(line, '\t');
        if (cols.size() != 10)
            throw ParseError("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, got " +
                             std::to_string(cols.size()));
        const std::string& id = cols[0];
        if (id.find('.') != std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": empty nodes (decimal ids) are not supported");
        if (auto dash = id.find('-'); dash != std::string::npos) {
            MultiwordRange r;
            r.start = static_cast<int>(parse_long(std::string_view(id).substr(0, dash),
                                                  "line " + std::to_string(line_no) + " id"));
            r.end = static_cast<int>(parse_long(std::string_view(id).substr(dash + 1),
                                                "line " + std::to_string(line_no) + " id"));
            r.form = cols[1];
            sent.multiword.push_back(std::move(r));
            continue;
        }
        Token t;
        t.index = static_cast<int>(parse_long(id, "line " + std::to_string(line_no) + " id"));
        if (t.index < 1)
            throw ParseError("line " + std::to_string(line_no) + ": token id must be >= 1");
        t.form = cols[1];
        t.lemma = cols[2];
        auto upos = upos_from_string(cols[3]);
        if (!upos)
            throw ParseError("line " + std::to_string(line_no) + ": unknown UPOS tag '" + cols[3] + "'");
        t.upos = *upos;
        t.xpos = cols[4] == "_" ? "" : cols[4];
        t.feats = parse_feats(cols[5], line_no);
        t.head = static_cast<int>(parse_long(cols[6], "line " + std::to_string(line_no) + " head"));
        t.deprel = cols[7];
        // cols[8] (enhanced deps) and cols[9] (misc) are accepted and dropped.
        sent.tokens.push_back(std::move(t));
    }
    flush_sentence(line_no + 1);
    finish_doc();

    for (const Document& d : corpus.documents) {
        PromptIndexEntry& entry = corpus.index[d.prompt_id];
        if (d.source_label == SourceLabel::human) {
            if (entry.human_doc_id)
                throw StructuralError("prompt '" + d.prompt_id + "' has more than one human document ('" +
                                      *entry.human_doc_id + "', '" + d.doc_id + "')");
            entry.human_doc_id = d.doc_id;
        } else {
            entry.machine_doc_ids.push_back(d.doc_id);
        }
    }
    for (auto& [prompt, entry] : corpus.index)
        std::sort(entry.machine_doc_ids.begin(), entry.machine_doc_ids.end());
    return corpus;
}

std::string to_conllu(const Corpus& corpus) {
    std::string out;
    for (const Document& d : corpus.documents) {
        out += "# newdoc id = " + d.doc_id + "\n";
        for (const Sentence& s : d.sentences) {
            if (!s.sent_id.empty()) out += "# sent_id = " + s.sent_id + "\n";
            if (!s.text.empty()) out += "# text = " + s.text + "\n";
            std::size_t mw = 0;
            for (const Token& t : s.tokens) {
                while (mw < s.multiword.size() && s.multiword[mw].start == t.index) {
                    const MultiwordRange& r = s.multiword[mw];
                    out += std::to_string(r.start) + "-" + std::to_string(r.end) + "\t" + r.form +
                           "\t_\t_\t_\t_\t_\t_\t_\t_\n";
                    ++mw;
                }
                out += std::to_string(t.index);
                out += '\t';
                out += t.form;
                out += '\t';
                out += t.lemma;
                out += '\t';
                out += to_string(t.upos);
                out += '\t';
                out += t.xpos.empty() ? "_" : t.xpos;
                out += '\t';
                if (t.feats.empty()) {
                    out += '_';
                } else {
                    bool first = true;
                    for (const auto& [k, v] : t.feats) {
                        if (!first) out += '|';
                        out += k;
                        out += '=';
                        out += v;
                        first = false;
                    }
                }
                out += '\t';
                out += std::to_string(t.head);
                out += '\t';
                out += t.deprel;
                out += "\t_\t_\n";
            }
            out += '\n';
        }
    }
    return out;
}

std::vector<DocPair> pair_corpus(const Corpus& corpus) {
    std::vector<std::string> orphans;
    std::vector<DocPair> pairs;
    for (const auto& [prompt, entry] : corpus.index) {
        if (entry.machine_doc_ids.empty()) continue;
        if (!entry.human_doc_id) {
            orphans.push_back(prompt);
            continue;
        }
        const Document* human = corpus.find(*entry.human_doc_id);
        for (const std::string& mid : entry.machine_doc_ids)
            pairs.push_back(DocPair{human, corpus.find(mid)});
    }
    if (!orphans.empty())
        throw PairingError("machine documents without a human counterpart for prompts: " +
                           join(orphans, ", "));
    return pairs;
}

} // namespace mgtkit
