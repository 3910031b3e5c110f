package org.example.shop.config;

public enum FeatureFlags {
    NEW_CHECKOUT(true),
    DARK_MODE(false) {
        @Override
        public String label() {
            return "dark";
        }
    };

    private final boolean enabled;

    FeatureFlags(boolean enabled) {
        this.enabled = enabled;
    }

    public boolean isEnabled() {
        return enabled;
    }

    public String label() {
        return name().toLowerCase();
    }
}
