#include "umae/text.hpp"

#include <algorithm>
#include <cctype>

namespace umae {

namespace {

bool is_ws(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_alnum(char c) {
    // Bytes >= 0x80 are kept as word characters so UTF-8 survives intact.
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || static_cast<unsigned char>(c) >= 0x80;
}

bool is_article(const std::string& w) {
    return w == "a" || w == "an" || w == "the";
}

} // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_ws(s[b])) {
        ++b;
    }
    while (e > b && is_ws(s[e - 1])) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_ws(c)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i != 0) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> ref_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    };
    size_t i = 0;
    while (i < text.size()) {
        // "<#...#>" runs are atomic tokens, case preserved.
        if (text[i] == '<' && i + 1 < text.size() && text[i + 1] == '#') {
            size_t end = text.find("#>", i + 2);
            if (end != std::string_view::npos) {
                flush();
                out.emplace_back(text.substr(i, end + 2 - i));
                i = end + 2;
                continue;
            }
        }
        char c = text[i];
        if (is_ws(c)) {
            flush();
        } else if (is_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
            out.emplace_back(1, c);
        }
        ++i;
    }
    flush();
    return out;
}

std::vector<std::string> metric_tokenize(std::string_view text, const TextNorm& norm) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !(norm.strip_articles && is_article(cur))) {
            out.push_back(cur);
        }
        cur.clear();
    };
    for (char c : text) {
        if (is_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::string normalize_answer(std::string_view text, const TextNorm& norm) {
    return join_tokens(metric_tokenize(text, norm));
}

// ---------------------------------------------------------------------------
// Porter stemmer (M.F. Porter, 1980), original published rule set.

namespace {

struct Stemmer {
    std::string b; // word buffer, lowercase
    int k = -1;    // index of last letter of the current stem

    bool cons(int i) const {
        switch (b[static_cast<size_t>(i)]) {
            case 'a':
            case 'e':
            case 'i':
            case 'o':
            case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Measure m of the stem b[0..j]: number of VC sequences.
    int measure(int j) const {
        int n = 0;
        int i = 0;
        for (;;) {
            if (i > j) {
                return n;
            }
            if (!cons(i)) {
                break;
            }
            ++i;
        }
        ++i;
        for (;;) {
            for (;;) {
                if (i > j) {
                    return n;
                }
                if (cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
            ++n;
            for (;;) {
                if (i > j) {
                    return n;
                }
                if (!cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem(int j) const {
        for (int i = 0; i <= j; ++i) {
            if (!cons(i)) {
                return true;
            }
        }
        return false;
    }

    bool double_cons(int j) const {
        if (j < 1) {
            return false;
        }
        return b[static_cast<size_t>(j)] == b[static_cast<size_t>(j - 1)] && cons(j);
    }

    // cvc at i, where the second c is not w, x, or y.
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) {
            return false;
        }
        char c = b[static_cast<size_t>(i)];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view s) {
        int len = static_cast<int>(s.size());
        if (len > k + 1) {
            return false;
        }
        return b.compare(static_cast<size_t>(k + 1 - len), static_cast<size_t>(len), s) == 0;
    }

    // Replaces the matched suffix of length old_len with s.
    void set_to(int old_len, std::string_view s) {
        b.replace(static_cast<size_t>(k + 1 - old_len), static_cast<size_t>(old_len), s);
        k += static_cast<int>(s.size()) - old_len;
    }

    // Applies old -> repl when the remaining stem has m > threshold.
    bool replace_if_m(std::string_view old, std::string_view repl, int threshold = 0) {
        if (!ends(old)) {
            return false;
        }
        int j = k - static_cast<int>(old.size());
        if (measure(j) > threshold) {
            set_to(static_cast<int>(old.size()), repl);
        }
        return true;
    }

    void step1a() {
        if (ends("sses")) {
            k -= 2;
        } else if (ends("ies")) {
            set_to(3, "i");
        } else if (!ends("ss") && ends("s")) {
            --k;
        }
    }

    void step1b() {
        bool cleanup = false;
        if (ends("eed")) {
            if (measure(k - 3) > 0) {
                --k;
            }
        } else if (ends("ed")) {
            if (vowel_in_stem(k - 2)) {
                k -= 2;
                cleanup = true;
            }
        } else if (ends("ing")) {
            if (vowel_in_stem(k - 3)) {
                k -= 3;
                cleanup = true;
            }
        }
        if (!cleanup) {
            return;
        }
        if (ends("at")) {
            set_to(2, "ate");
        } else if (ends("bl")) {
            set_to(2, "ble");
        } else if (ends("iz")) {
            set_to(2, "ize");
        } else if (double_cons(k)) {
            char c = b[static_cast<size_t>(k)];
            if (c != 'l' && c != 's' && c != 'z') {
                --k;
            }
        } else if (measure(k) == 1 && cvc(k)) {
            set_to(0, "e");
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem(k - 1)) {
            b[static_cast<size_t>(k)] = 'i';
        }
    }

    void step2() {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
        };
        for (const auto& [old, repl] : rules) {
            if (replace_if_m(old, repl)) {
                return;
            }
        }
    }

    void step3() {
        static const std::pair<std::string_view, std::string_view> rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        for (const auto& [old, repl] : rules) {
            if (replace_if_m(old, repl)) {
                return;
            }
        }
    }

    void step4() {
        static const std::string_view suffixes[] = {
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
            "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        };
        for (std::string_view s : suffixes) {
            if (!ends(s)) {
                continue;
            }
            int j = k - static_cast<int>(s.size());
            if (s == "ion" && !(j >= 0 && (b[static_cast<size_t>(j)] == 's' || b[static_cast<size_t>(j)] == 't'))) {
                return;
            }
            if (measure(j) > 1) {
                k = j;
            }
            return;
        }
    }

    void step5() {
        if (ends("e")) {
            int m = measure(k - 1);
            if (m > 1 || (m == 1 && !cvc(k - 1))) {
                --k;
            }
        }
        if (b[static_cast<size_t>(k)] == 'l' && double_cons(k) && measure(k) > 1) {
            --k;
        }
    }

    std::string run(std::string_view word) {
        b = to_lower(word);
        k = static_cast<int>(b.size()) - 1;
        if (k <= 1) {
            return b;
        }
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5();
        b.resize(static_cast<size_t>(k + 1));
        return b;
    }
};

} // namespace

std::string porter_stem(std::string_view word) {
    // Non-alphabetic tokens pass through; stemming is only defined on letters.
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c)) == 0) {
            return std::string(word);
        }
    }
    Stemmer s;
    return s.run(word);
}

} // namespace umae
