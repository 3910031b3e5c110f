package org.example.shop.report;

import java.util.List;

import org.example.shop.model.Order;

public class CsvExporter {
    private final char separator;

    public CsvExporter(char separator) {
        this.separator = separator;
    }

    public String export(List<Order> orders) {
        StringBuilder csv = new StringBuilder("id" + separator + "items\n");
        for (Order order : orders) {
            csv.append(order.getId()).append(separator).append(order.getItems().size()).append('\n');
        }
        return csv.toString();
    }
}
