// Smooth scroll pane with kinetic fling support.
package ui;

public class ScrollPane extends Container {
    private int clickCount = 0;

    // Kinetic scrolling decays the velocity every frame.
    void fling(int velocity) {
        while (velocity > 0) {
            scrollBy(velocity);
            velocity = velocity / 2;
        }
    }

    void reset() {
        clickCount = 0;
    }
}
