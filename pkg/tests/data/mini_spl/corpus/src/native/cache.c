/* Local cache of server responses. */

#ifdef AnnotationServer
static CacheEntry *cache_store(CacheEntry *entry) {
    annotation_cache_put(entry);
    return entry;
}
#else
static CacheEntry *cache_miss(CacheEntry *entry) {
    (void) entry;
    return entry;
}
#endif
