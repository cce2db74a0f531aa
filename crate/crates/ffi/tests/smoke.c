#include <stdio.h>
#include <string.h>
#include "wordsimt.h"

int main(void) {
    WsimtSentence *src = NULL, *tgt = NULL;
    WsimtSchedule *word = NULL;
    double al = 0.0;
    size_t reads[16], len = 0;

    if (wsimt_sentence_parse("Meine\xe2\x96\x81 B eine\xe2\x96\x81 waren\xe2\x96\x81 bl ut \xc3\xbc" "ber str\xc3\xb6m t .\xe2\x96\x81",
                             WSIMT_MARKER_CONVENTION_SUFFIX, &src) != WSIMT_STATUS_OK) return 1;
    if (wsimt_sentence_parse("My\xe2\x96\x81 leg s\xe2\x96\x81 were\xe2\x96\x81 bloo dy .\xe2\x96\x81",
                             WSIMT_MARKER_CONVENTION_SUFFIX, &tgt) != WSIMT_STATUS_OK) return 2;
    if (wsimt_waitk_word(1, src, tgt, &word) != WSIMT_STATUS_OK) return 3;
    if (wsimt_schedule_reads(word, reads, 16, &len) != WSIMT_STATUS_OK) return 4;
    if (wsimt_word_average_lagging(word, src, tgt, &al) != WSIMT_STATUS_OK) return 5;
    for (size_t i = 0; i < len; i++) printf("%zu ", reads[i]);
    printf("| %.3f\n", al);

    if (wsimt_waitk_token(0, 3, 3, &word) != WSIMT_STATUS_INVALID_PARAMETER) return 6;
    printf("%s\n", wsimt_last_error());

    wsimt_schedule_free(word);
    wsimt_sentence_free(src);
    wsimt_sentence_free(tgt);
    return 0;
}
