package org.example.shop.ui;

import org.example.shop.model.Computer;

public class Dashboard {
    private final ComputerView computerView;
    private final StringBuilder screen = new StringBuilder();

    public Dashboard(ComputerView computerView) {
        this.computerView = computerView;
    }

    public String render() {
        screen.setLength(0);
        screen.append("Dashboard\n");
        return screen.toString();
    }
}
