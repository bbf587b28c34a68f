/* Iterative Fibonacci; exits 0 when fib(30) is right. */
#include <stdlib.h>

static unsigned long fib(int n)
{
    unsigned long a = 0, b = 1;
    for (int i = 0; i < n; i++) {
        unsigned long t = a + b;
        a = b;
        b = t;
    }
    return a;
}

int main(int argc, char **argv)
{
    long loops = argc > 1 ? atol(argv[1]) : 1;
    volatile int n = 30;
    unsigned long r = 0;
    for (long i = 0; i < loops; i++)
        for (int k = 0; k < 200000; k++)
            r = fib(n);
    return r == 832040ul ? 0 : 1;
}
