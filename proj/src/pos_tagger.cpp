#include <string>
#include <unordered_set>

#include "synthscan/prompt_analysis.hpp"

namespace synthscan {

namespace {

// Closed function-word list: determiners, pronouns, prepositions,
// conjunctions, auxiliaries, common adverbs and qualifiers.
const std::unordered_set<std::string>& function_words() {
    static const std::unordered_set<std::string> words = {
        "a", "an", "the", "this", "that", "these", "those", "some", "any", "no", "every", "each",
        "either", "neither", "both", "all", "few", "several", "many", "much", "more", "most",
        "less", "least", "own", "other", "another", "such", "what", "which", "whose", "who",
        "whom", "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves", "you",
        "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her",
        "hers", "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves",
        "one", "ones", "someone", "somebody", "something", "anyone", "anybody", "anything",
        "everyone", "everybody", "everything", "nobody", "nothing", "in", "on", "at", "by", "for",
        "with", "without", "about", "against", "between", "among", "into", "onto", "through",
        "during", "before", "after", "above", "below", "under", "underneath", "over", "up",
        "down", "out", "off", "near", "nearby", "beside", "besides", "behind", "beyond", "across",
        "around", "along", "alongside", "amid", "atop", "toward", "towards", "upon", "within",
        "inside", "outside", "of", "to", "from", "as", "than", "via", "per", "and", "or", "but",
        "nor", "so", "yet", "if", "because", "although", "though", "while", "whereas", "unless",
        "until", "till", "since", "when", "whenever", "where", "wherever", "why", "how",
        "whether", "once", "am", "is", "are", "was", "were", "be", "been", "being", "do", "does",
        "did", "done", "doing", "have", "has", "had", "having", "will", "would", "shall",
        "should", "can", "could", "may", "might", "must", "ought", "not", "never", "always",
        "often", "sometimes", "rarely", "seldom", "usually", "again", "also", "too", "very",
        "quite", "rather", "almost", "nearly", "just", "only", "even", "still", "already",
        "perhaps", "maybe", "here", "there", "now", "then", "today", "yesterday", "tomorrow",
        "soon", "later", "ago", "away", "back", "forth", "together", "apart", "instead",
        "however", "therefore", "thus", "hence", "moreover", "furthermore", "meanwhile",
        "otherwise", "anyway", "indeed", "sure", "yes", "okay", "ok", "els", "else", "etc",
        "whilst", "aboard", "despite", "except", "like", "unlike", "versus", "vs", "next",
        "last", "first", "second", "third", "front", "forward", "backward", "left", "right",
        "somewhere", "anywhere", "everywhere", "nowhere", "abroad", "ahead", "aside", "due",
        "plus", "minus", "none", "lot", "lots", "bit", "quit", "s", "t", "re", "ve", "ll", "d",
        "m", "isn", "aren", "wasn", "weren", "don", "doesn", "didn", "won", "wouldn", "couldn",
        "shouldn", "hasn", "haven", "hadn", "cannot", "cant", "dont", "doesnt", "isnt", "arent",
        "wont", "its", "theres", "heres", "thats", "whats", "whos", "lets"};
    return words;
}

// Concrete objects common in captioning corpora, so short prompts tag sanely.
const std::unordered_set<std::string>& noun_words() {
    static const std::unordered_set<std::string> words = {
        "person", "people", "man", "men", "woman", "women", "child", "children", "boy", "girl",
        "dog", "cat", "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "bird",
        "mat", "car", "cars", "bus", "buses", "train", "truck", "boat", "airplane", "plane",
        "bicycle", "bike", "motorcycle", "bench", "chair", "couch", "sofa", "bed", "table",
        "desk", "toilet", "window", "door", "street", "road", "sidewalk", "sign", "light",
        "hydrant", "meter", "grass", "field", "tree", "trees", "flower", "flowers", "plant",
        "mountain", "hill", "snow", "beach", "sand", "water", "river", "lake", "ocean", "sky",
        "cloud", "clouds", "sun", "rain", "skis", "ski", "snowboard", "skateboard", "surfboard",
        "kite", "ball", "bat", "glove", "racket", "frisbee", "bottle", "glass", "cup", "mug",
        "fork", "knife", "spoon", "bowl", "plate", "pan", "pot", "food", "pizza", "sandwich",
        "burger", "hotdog", "cake", "donut", "doughnut", "banana", "apple", "orange", "broccoli",
        "carrot", "salad", "cheese", "bread", "kitchen", "bathroom", "bedroom", "room", "house",
        "building", "city", "town", "wall", "floor", "ceiling", "roof", "clock", "vase",
        "scissors", "book", "books", "phone", "laptop", "computer", "keyboard", "mouse",
        "remote", "tv", "television", "microwave", "oven", "toaster", "sink", "refrigerator",
        "fridge", "umbrella", "bag", "handbag", "backpack", "suitcase", "tie", "hat", "shirt",
        "jacket", "shoe", "shoes", "photo", "picture", "image", "camera", "group", "crowd",
        "side", "top", "bottom", "middle", "corner", "edge", "stove", "counter", "shelf",
        "mirror", "lamp", "pillow", "blanket", "towel", "zoo", "park", "yard", "garden", "farm",
        "station", "airport", "market", "store", "shop", "restaurant", "gras"};
    return words;
}

bool ends_with(const std::string& s, const char* suffix) {
    std::string_view sv(suffix);
    return s.size() >= sv.size() && s.compare(s.size() - sv.size(), sv.size(), sv) == 0;
}

}  // namespace

bool LexiconTagger::is_noun(const std::string& token) const {
    if (token.empty()) return false;
    if (noun_words().count(token)) return true;
    if (function_words().count(token)) return false;
    if (ends_with(token, "ly") || ends_with(token, "ing") || ends_with(token, "ed")) return false;
    if (ends_with(token, "tion") || ends_with(token, "sion") || ends_with(token, "ment") ||
        ends_with(token, "ness") || ends_with(token, "ity") || ends_with(token, "ance") ||
        ends_with(token, "ence") || ends_with(token, "ship") || ends_with(token, "hood") ||
        ends_with(token, "dom") || ends_with(token, "ism") || ends_with(token, "ist") ||
        ends_with(token, "age") || ends_with(token, "ery"))
        return true;
    // unknown content word: treat as a noun (captions are object-heavy)
    return true;
}

}  // namespace synthscan
