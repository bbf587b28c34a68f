/* Edit distance between two fixed strings; exits 0 when it is right. */
#include <stdlib.h>
#include <string.h>

static int distance(const char *a, const char *b)
{
    int n = (int)strlen(a), m = (int)strlen(b);
    int row[64];
    for (int j = 0; j <= m; j++)
        row[j] = j;
    for (int i = 1; i <= n; i++) {
        int diag = row[0];
        row[0] = i;
        for (int j = 1; j <= m; j++) {
            int up = row[j];
            int best = diag + (a[i - 1] != b[j - 1]);
            if (up + 1 < best)
                best = up + 1;
            if (row[j - 1] + 1 < best)
                best = row[j - 1] + 1;
            row[j] = best;
            diag = up;
        }
    }
    return row[m];
}

int main(int argc, char **argv)
{
    long loops = argc > 1 ? atol(argv[1]) : 1;
    volatile int d = 0;
    for (long i = 0; i < loops; i++)
        for (int k = 0; k < 5000; k++)
            d = distance("intention of the kitten", "execution of the sitting");
    return d == 8 ? 0 : 1;
}
