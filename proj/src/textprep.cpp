#include "corpusdrift/textprep.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "corpusdrift/hashing.hpp"

namespace corpusdrift::textprep {

namespace {

// Minimal UTF-8 walker. Invalid sequences are consumed one byte at a time
// and classified as boundaries.
struct Utf8Cursor {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }

    std::uint32_t next() {
        std::uint8_t b0 = std::uint8_t(text[pos]);
        if (b0 < 0x80) {
            ++pos;
            return b0;
        }
        int len = b0 >= 0xF0 ? 4 : b0 >= 0xE0 ? 3 : b0 >= 0xC0 ? 2 : 1;
        if (len == 1 || pos + len > text.size()) {
            ++pos;
            return 0xFFFD;
        }
        std::uint32_t cp = b0 & (0x7F >> len);
        for (int i = 1; i < len; ++i) {
            std::uint8_t bi = std::uint8_t(text[pos + i]);
            if ((bi & 0xC0) != 0x80) {
                ++pos;
                return 0xFFFD;
            }
            cp = (cp << 6) | (bi & 0x3F);
        }
        pos += len;
        return cp;
    }
};

bool is_ascii_digit(std::uint32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_letter(std::uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    // Latin-1 supplement and Latin Extended-A/B letters, minus the two
    // arithmetic signs embedded in that range.
    if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
    return false;
}

bool is_whitespace(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
           cp == '\v' || cp == 0xA0 || cp == 0x2009 || cp == 0x200A || cp == 0x2028;
}

std::uint32_t to_lower(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // À..Þ
    return cp;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(char(cp));
    } else if (cp < 0x800) {
        out.push_back(char(0xC0 | (cp >> 6)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(char(0xE0 | (cp >> 12)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(char(0xF0 | (cp >> 18)));
        out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    }
}

struct RawToken {
    std::string text;
    std::size_t n_letters = 0;
    std::size_t n_digits = 0;
    std::size_t n_codepoints = 0;
};

// Splits text into raw tokens. With strip_symbols every non-alphanumeric
// codepoint is a boundary; without it only whitespace splits, and leading/
// trailing punctuation is trimmed off each token.
std::vector<RawToken> split_tokens(std::string_view text, const NormalizationConfig& config) {
    std::vector<RawToken> out;
    RawToken current;
    std::vector<std::uint32_t> cps;  // scratch for the keep-symbols path

    auto flush = [&] {
        if (!current.text.empty()) out.push_back(std::move(current));
        current = RawToken{};
    };

    Utf8Cursor cur{text};
    if (config.strip_symbols) {
        while (!cur.done()) {
            std::uint32_t cp = cur.next();
            if (is_letter(cp) || is_ascii_digit(cp)) {
                append_utf8(current.text, config.lowercase ? to_lower(cp) : cp);
                current.n_codepoints++;
                if (is_ascii_digit(cp)) current.n_digits++; else current.n_letters++;
            } else {
                flush();
            }
        }
        flush();
        return out;
    }

    // Whitespace-only splitting; trim non-alphanumerics at the edges.
    auto flush_cps = [&] {
        std::size_t lo = 0, hi = cps.size();
        while (lo < hi && !is_letter(cps[lo]) && !is_ascii_digit(cps[lo])) ++lo;
        while (hi > lo && !is_letter(cps[hi - 1]) && !is_ascii_digit(cps[hi - 1])) --hi;
        for (std::size_t i = lo; i < hi; ++i) {
            std::uint32_t cp = config.lowercase ? to_lower(cps[i]) : cps[i];
            append_utf8(current.text, cp);
            current.n_codepoints++;
            if (is_ascii_digit(cp)) current.n_digits++;
            else if (is_letter(cp)) current.n_letters++;
        }
        cps.clear();
        flush();
    };
    while (!cur.done()) {
        std::uint32_t cp = cur.next();
        if (is_whitespace(cp)) flush_cps(); else cps.push_back(cp);
    }
    flush_cps();
    return out;
}

}  // namespace

NormalizationConfig::NormalizationConfig() {
    const auto& list = default_stopword_list();
    stopwords.insert(list.begin(), list.end());
    stopwords_sha256 = default_stopword_sha256();
}

std::string NormalizationConfig::fingerprint() const {
    std::ostringstream os;
    os << "lowercase=" << lowercase << ";strip_numbers=" << strip_numbers
       << ";strip_symbols=" << strip_symbols << ";normalizer=" << int(normalizer)
       << ";stopwords=" << stopwords_sha256 << ";lemma_table=" << lemma_table_sha256;
    return os.str();
}

std::set<std::string> load_stopword_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopword file: " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.insert(line);
    }
    return words;
}

std::map<std::string, std::string> load_lemma_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lemma table: " + path.string());
    std::map<std::string, std::string> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw std::runtime_error("lemma table: malformed line " + std::to_string(line_no) +
                                     " in " + path.string());
        }
        table[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return table;
}

std::string stem_token(const std::string& token) {
    auto ends_with = [&](std::string_view suffix) {
        return token.size() >= suffix.size() &&
               token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    std::size_t n = token.size();
    if (n >= 5 && ends_with("ies")) return token.substr(0, n - 3) + "y";
    if (n >= 5 && (ends_with("sses") || ends_with("shes") || ends_with("ches") ||
                   ends_with("xes") || ends_with("zes"))) {
        return token.substr(0, n - 2);
    }
    if (n >= 4 && token.back() == 's' && !ends_with("ss") && !ends_with("us") && !ends_with("is")) {
        return token.substr(0, n - 1);
    }
    return token;
}

std::vector<std::string> tokenize(std::string_view text, const NormalizationConfig& config) {
    std::vector<std::string> out;
    for (RawToken& raw : split_tokens(text, config)) {
        if (config.strip_numbers && raw.n_letters == 0 && raw.n_digits > 0) continue;
        if (raw.n_codepoints < 2) continue;  // single-char residue
        std::string token = std::move(raw.text);
        if (config.stopwords.count(token)) continue;

        if (config.normalizer == Normalizer::suffix_stemmer) {
            // The stemmer is idempotent but loop anyway: cheap, and keeps the
            // fixed-point guarantee independent of future rule edits.
            for (int i = 0; i < 3; ++i) {
                std::string next = stem_token(token);
                if (next == token) break;
                token = std::move(next);
            }
        } else if (config.normalizer == Normalizer::lemma_table) {
            for (int i = 0; i < 3; ++i) {
                auto it = config.lemma_table.find(token);
                if (it == config.lemma_table.end() || it->second == token) break;
                token = it->second;
            }
        }

        // Outputs must survive their own filters, so re-check after the
        // normalizer (a stem or lemma may land on a stopword or collapse).
        std::size_t cps = 0;
        for (char c : token) cps += (std::uint8_t(c) & 0xC0) != 0x80;
        if (cps < 2) continue;
        if (config.stopwords.count(token)) continue;
        if (config.strip_numbers) {
            bool all_digits = !token.empty();
            for (char c : token) {
                if (c < '0' || c > '9') { all_digits = false; break; }
            }
            if (all_digits) continue;
        }
        out.push_back(std::move(token));
    }
    return out;
}

TokenStream normalize(std::string_view text, std::string doc_id, const NormalizationConfig& config) {
    return TokenStream{std::move(doc_id), tokenize(text, config)};
}

}  // namespace corpusdrift::textprep
