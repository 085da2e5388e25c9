/* Suggestion engine for annotation text fields. */

#ifdef Autocomplete
static const char *suggest_completion(const char *prefix) {
    SuggestionIndex lookup = suggestion_index_for(prefix);
    return suggestion_best(lookup, prefix);
}
#endif

#ifndef Autocomplete
static const char *suggest_completion(const char *prefix) {
    (void) prefix;
    return plain_fallback();
}
#endif
